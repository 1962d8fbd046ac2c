//! Reference transmit-vector sets for the (3,2,2,3) GenSM and (3,2,2,4)
//! GenQSM configurations, one set per correlation coefficient in
//! {0, 0.1, 0.3}. These are externally designed reference optima kept as
//! regression fixtures; they are one local optimum each, not unique.

use nalgebra::DVector;

use crate::config::{CsitMode, Scheme, SystemConfig};
use crate::error::{Error, Result};
use crate::shaping::{Provenance, TransmitSet};

/// Fixture names accepted by [`load_fixture_set`].
pub const FIXTURE_NAMES: [&str; 6] = [
    "gensm_d0",
    "gensm_d01",
    "gensm_d03",
    "genqsm_d0",
    "genqsm_d01",
    "genqsm_d03",
];

type C = (f64, f64);

// (3,2,2,3) GenSM, delta = 0.
const GENSM_D0: [[C; 3]; 8] = [
    [(-1.1177, -0.1533), (0.0, 0.0), (-0.0007, 0.0)],
    [(0.1004, -0.7319), (0.0, 0.0), (0.0832, -0.5971)],
    [(-0.1004, 0.7313), (0.0, 0.0), (0.0836, -0.5978)],
    [(0.0, 0.0), (0.4163, 0.4714), (-0.6856, 0.2086)],
    [(0.0, 0.0), (0.6156, -0.3389), (0.5214, 0.3777)],
    [(0.0, 0.0), (-0.5637, 0.5430), (0.4065, 0.3614)],
    [(0.0, 0.0), (-0.4699, -0.6776), (-0.4120, 0.2457)],
    [(1.1178, 0.1534), (-0.0001, -0.0004), (0.0, 0.0)],
];

// (3,2,2,3) GenSM, delta = 0.1.
const GENSM_D01: [[C; 3]; 8] = [
    [(-0.1240, -0.8435), (-0.3710, -0.4843), (0.0, 0.0)],
    [(0.8346, -0.1739), (0.5824, 0.1816), (0.0, 0.0)],
    [(0.1239, 0.8434), (0.3710, 0.4843), (0.0, 0.0)],
    [(0.0, 0.0), (0.3067, -0.4391), (0.5095, -0.7294)],
    [(-0.3328, -0.2325), (0.0, 0.0), (0.6128, 0.4281)],
    [(0.0, 0.0), (-0.3067, 0.4391), (-0.5095, 0.7294)],
    [(0.3328, 0.2324), (0.0, 0.0), (-0.6128, -0.4281)],
    [(-0.8346, 0.1740), (-0.5824, -0.1816), (0.0, 0.0)],
];

// (3,2,2,3) GenSM, delta = 0.3.
const GENSM_D03: [[C; 3]; 8] = [
    [(0.0, 0.0), (0.1419, 0.7883), (0.1285, 0.7472)],
    [(0.0, 0.0), (0.2711, -0.9099), (0.3027, -1.0037)],
    [(0.0, 0.0), (-0.5012, 0.5787), (-0.5744, 0.5369)],
    [(-0.7199, -0.0137), (-0.6850, -0.1235), (0.0, 0.0)],
    [(-0.1523, -0.6480), (-0.2336, -0.4745), (0.0, 0.0)],
    [(0.0, 0.0), (0.6269, 0.3302), (0.6699, 0.2375)],
    [(0.5631, -0.4223), (0.4042, -0.3051), (0.0, 0.0)],
    [(-0.0535, 0.2969), (0.0, 0.0), (-0.0011, -0.0562)],
];

// (3,2,2,4) GenQSM, delta = 0.
const GENQSM_D0: [[C; 3]; 16] = [
    [(-0.2338, 0.3906), (0.2806, -0.8627), (0.0, 0.0)],
    [(0.7852, -0.0556), (-0.3070, -0.5995), (0.0, 0.0)],
    [(-0.4304, 0.0), (-0.7608, -0.3647), (0.0, -0.3581)],
    [(0.0, 0.0), (-0.6107, -0.0578), (-0.0003, 0.8040)],
    [(0.0, 0.0068), (0.0017, -0.0002), (-0.7925, 0.0)],
    [(0.0, -0.9776), (-0.1668, -0.1926), (-0.0066, 0.0)],
    [(0.5328, 0.0), (0.8202, -0.1502), (0.0, -0.3357)],
    [(-0.0819, -0.3075), (0.6306, 0.0), (0.0, 0.7233)],
    [(-0.2282, 0.5276), (0.5738, 0.6377), (0.0, 0.0)],
    [(0.4247, 0.0), (-0.2670, 0.3035), (0.0, -0.8379)],
    [(-1.0227, 0.1745), (0.0, 0.0), (-0.1326, 0.3776)],
    [(-0.3438, -0.2904), (-0.3953, 0.8120), (0.0, 0.0)],
    [(0.0112, 0.0), (0.0, -0.0035), (0.7889, -0.0042)],
    [(-0.5899, -0.2664), (0.3900, 0.0), (0.0, -0.6714)],
    [(0.7613, 0.0), (0.0407, 0.5918), (0.0, 0.3287)],
    [(0.2101, 0.9225), (-0.3728, 0.0), (0.0, -0.0307)],
];

// (3,2,2,4) GenQSM, delta = 0.1.
const GENQSM_D01: [[C; 3]; 16] = [
    [(-0.3765, 0.0), (-0.3369, -0.5475), (0.0, -0.7490)],
    [(-0.0084, 0.0), (-0.2320, -0.7504), (0.0, 0.8066)],
    [(-0.7282, -0.1672), (-0.6096, -0.0433), (0.0, 0.0)],
    [(0.1880, 0.8692), (-0.1510, 0.5424), (0.0, 0.0)],
    [(0.7840, 0.1044), (0.8328, 0.0), (0.0, -0.1644)],
    [(0.0, -0.9724), (0.0054, -0.4107), (-0.1058, 0.0)],
    [(0.4920, -0.7041), (0.0, 0.0), (0.5193, 0.3054)],
    [(-0.3073, 0.6054), (0.0, 0.0), (-0.1097, -0.5325)],
    [(0.7253, 0.0536), (0.0, 0.2223), (-0.3856, 0.0)],
    [(0.0, 0.4426), (0.2281, 0.0567), (0.6645, 0.0)],
    [(0.2960, 0.0), (0.2766, -0.2495), (0.0, -0.6872)],
    [(0.1775, 0.0), (0.4132, 0.4427), (0.0, 0.8821)],
    [(-0.7016, 0.0), (0.0, 0.4181), (0.3013, 0.3728)],
    [(-0.6165, -0.3602), (0.0, 0.0), (0.6890, -0.2347)],
    [(0.0, 0.4195), (-0.4286, 0.0), (-0.6306, 0.4376)],
    [(0.0450, -0.3236), (0.0, 0.0), (-0.9465, -0.2560)],
];

// (3,2,2,4) GenQSM, delta = 0.3.
const GENQSM_D03: [[C; 3]; 16] = [
    [(0.5878, -0.3085), (0.0, -0.0947), (-0.7883, 0.0)],
    [(-0.9532, -0.1468), (-0.7418, -0.1129), (0.0, 0.0)],
    [(0.4954, -0.6948), (0.3057, -0.5752), (0.0, 0.0)],
    [(0.0, 0.6985), (-0.4899, 0.5915), (-0.5052, 0.0)],
    [(0.0, 0.0), (-0.4795, -0.4245), (-0.6073, -0.4111)],
    [(0.0, 0.0), (-0.3107, 0.1851), (-0.7693, 0.0429)],
    [(0.0, -0.1242), (0.0515, -0.1875), (0.5202, 0.0)],
    [(0.0417, 0.7919), (0.0288, 0.6914), (0.0, 0.0)],
    [(0.9175, 0.0), (0.4930, 0.0833), (0.0, -0.0945)],
    [(0.0, -0.3448), (0.6695, -0.3860), (0.8799, 0.0)],
    [(0.4810, 0.0), (0.1179, 0.2399), (0.0, 0.4618)],
    [(-0.5146, 0.0), (0.0645, 0.0682), (0.0, 0.8279)],
    [(0.0, 0.7548), (-0.0826, 0.0), (-0.0552, -0.4427)],
    [(-0.1837, 0.0), (0.0788, -0.4790), (0.0, -0.6750)],
    [(0.0, 0.0), (0.6779, 0.4047), (0.8375, 0.3558)],
    [(-0.8045, -0.3543), (0.0, 0.0), (0.2353, 0.0098)],
];

fn expand(rows: &[[C; 3]]) -> Vec<DVector<f64>> {
    rows.iter()
        .map(|row| {
            let mut v = DVector::zeros(6);
            for (i, &(re, im)) in row.iter().enumerate() {
                v[i] = re;
                v[3 + i] = im;
            }
            v
        })
        .collect()
}

/// Load one of the reference sets by name.
///
/// Names: `gensm_d0`, `gensm_d01`, `gensm_d03` for the (3,2,2,3) GenSM sets
/// and `genqsm_d0`, `genqsm_d01`, `genqsm_d03` for the (3,2,2,4) GenQSM
/// sets, with `d0`/`d01`/`d03` meaning delta = 0 / 0.1 / 0.3.
pub fn load_fixture_set(name: &str) -> Result<TransmitSet> {
    let (scheme, n_bits, delta, rows): (Scheme, usize, f64, &[[C; 3]]) = match name {
        "gensm_d0" => (Scheme::GenSm, 3, 0.0, &GENSM_D0),
        "gensm_d01" => (Scheme::GenSm, 3, 0.1, &GENSM_D01),
        "gensm_d03" => (Scheme::GenSm, 3, 0.3, &GENSM_D03),
        "genqsm_d0" => (Scheme::GenQsm, 4, 0.0, &GENQSM_D0),
        "genqsm_d01" => (Scheme::GenQsm, 4, 0.1, &GENQSM_D01),
        "genqsm_d03" => (Scheme::GenQsm, 4, 0.3, &GENQSM_D03),
        other => return Err(Error::UnknownFixture(other.to_string())),
    };
    let csit = if delta == 0.0 {
        CsitMode::None
    } else {
        CsitMode::Statistical
    };
    let config = SystemConfig::new(scheme, 3, 2, 2, n_bits, csit)?;
    let mut provenance = Provenance::new("reference-fixture", "statistical");
    provenance.delta = Some(delta);
    TransmitSet::new(expand(rows), config, provenance)
}
