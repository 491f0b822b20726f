//! Independent reference computations shared by several test targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use vcistack::ensemble::combine_simple;
use vcistack::stats::squared_pearson;

/// Projected gradient ascent on the 2n-dimensional dual; the projection onto
/// the box and the equality constraint is found by bisection on its multiplier.
pub fn qp_oracle(k: &[f64], z: &[f64], c: f64, eps: f64) -> f64 {
    let n = z.len();
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let project = |v: &[f64]| -> Vec<f64> {
        let at = |lam: f64| -> (Vec<f64>, f64) {
            let b: Vec<f64> = (0..2 * n).map(|t| (v[t] - lam * sign(t)).clamp(0.0, c)).collect();
            let s = (0..2 * n).map(|t| sign(t) * b[t]).sum();
            (b, s)
        };
        let (mut lo, mut hi) = (-1e3, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid).1 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi)).0
    };
    let mut b = vec![0.0; 2 * n];
    let step = 1.0 / (2.0 * n as f64);
    for _ in 0..100_000 {
        let beta: Vec<f64> = (0..n).map(|i| b[i] - b[i + n]).collect();
        let kb: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i * n + j] * beta[j]).sum()).collect();
        let g: Vec<f64> = (0..2 * n)
            .map(|t| {
                let i = t % n;
                sign(t) * (z[i] - kb[i]) - eps
            })
            .collect();
        let v: Vec<f64> = (0..2 * n).map(|t| b[t] + step * g[t]).collect();
        b = project(&v);
    }
    let beta: Vec<f64> = (0..n).map(|i| b[i] - b[i + n]).collect();
    dual(k, z, eps, &beta)
}

pub fn dual(k: &[f64], z: &[f64], eps: f64, beta: &[f64]) -> f64 {
    let n = z.len();
    let quad: f64 = (0..n).map(|i| (0..n).map(|j| beta[i] * k[i * n + j] * beta[j]).sum::<f64>()).sum();
    -0.5 * quad - eps * beta.iter().map(|b| b.abs()).sum::<f64>() + z.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()
}

// W and p from scipy.stats.shapiro (swilk, AS R94) on fixed vectors.
pub const SHAPIRO_REFERENCE: [(&[f64], f64, f64); 20] = [
    (&[9.5776, 8.9645, 10.2992], 0.9978020627057819, 0.9104288299974695),
    (&[1.7485, 6.6586, 8.0822, 12.3735], 0.9875222886750716, 0.9444587831968063),
    (&[0.289, -0.6086, 0.0166, 0.3547, 0.5644], 0.9016276271585352, 0.4189467718049911),
    (&[10.8849, 8.1443, 8.1337, 7.0599, 8.4246, 10.6388], 0.8659670467867022, 0.21059701251102741),
    (&[3.2919, 0.6293, 0.7067, 7.1509, 2.7604, 1.4247, 3.3828], 0.8658619616263905, 0.1707096606737501),
    (&[9.5948, 11.712, 10.4049, 12.7377, 9.1836, 11.5119, 10.4503, 13.3931], 0.9572538131069187, 0.7835721789967793),
    (&[-0.0653, 0.9813, 0.0927, -0.8819, 0.0034, -0.0166, -0.856, -0.1347, 0.0623], 0.8635337810792189, 0.10473519216445276),
    (&[0.9442, 1.4205, 4.9989, 4.4995, 4.7116, 5.5894, 1.4592, 4.3179, 0.708, 0.5493], 0.8283124930494501, 0.03193034697260283),
    (&[10.1182, 9.0208, 11.7091, 8.0569, 11.7532, 7.6094, 7.266, 8.9031, 10.1843, 6.958, 8.9916], 0.929919423053104, 0.41003896453310645),
    (&[0.0024, -0.2386, 0.4525, 0.1113, 0.5953, 0.6563, -0.4178, 0.4322, -0.5638, 0.0049, -0.3547, -0.1216], 0.943624881163906, 0.5464066138132758),
    (&[6.0594, 1.42, 2.1936, 0.2058, 1.556, 0.8172, 0.068, 6.9764, 0.166, 5.2433, 0.7636, 0.2415, 0.1751, 2.6296, 0.2413], 0.7730557120526955, 0.0016926058347494896),
    (&[12.1631, 7.7598, 10.3805, 11.0481, 8.1783, 12.1584, 11.7558, 13.3969, 10.7797, 11.8921, 13.6242, 10.406, 8.9996, 7.0982, 10.5729, 7.4656, 12.1954, 10.2943, 11.6221, 10.3254], 0.9413548304252527, 0.254312607262256),
    (&[-1.3808, -2.2282, -1.975, -1.2999, -2.6292, -1.9037, -1.5124, -2.5318, -2.3499, -2.625, -1.4096, -2.0947, 1.8424, 1.2937, 1.4681, 2.4633, 1.9053, 1.7996, 2.3959, 1.5471, 2.8067, 1.8159, 1.7435, 1.8674, 2.0187], 0.8170969363323679, 0.0004445499625723227),
    (&[-0.6077, -0.4102, -0.8646, 0.0284, -0.4513, 0.6183, 0.2101, 0.6962, 0.9392, 0.1639, 0.8198, -0.4748, 0.7818, -0.0751, -0.0301, -0.7414, -0.7607, -0.3617, 0.5713, -0.964, 0.8606, -0.7952, -0.3772, 0.4098, 0.4202, 0.8835, 0.8455, 0.3987, -0.9433, -0.5844], 0.9146076095394057, 0.019480600034347005),
    (&[0.1552, 0.8059, 0.7822, 0.029, 1.872, 1.0773, 3.212, 3.4516, 5.7575, 3.6713, 1.2225, 1.0865, 0.5422, 1.8167, 2.5135, 1.0524, 1.7582, 2.8296, 5.4793, 0.9994, 0.545, 8.4319, 1.8003, 0.4141, 3.3273, 4.7728, 0.547, 7.6355, 0.7331, 1.8039, 0.5868, 2.6768, 0.8867, 3.186, 4.8286], 0.857933844511856, 0.00035085566145089646),
    (&[6.8954, 11.2585, 10.8941, 10.0375, 7.3088, 9.2221, 11.3644, 9.6314, 10.2402, 12.2904, 11.267, 6.8025, 10.7333, 8.1283, 5.5502, 12.3199, 7.0288, 9.3689, 12.4979, 11.406, 9.8759, 8.2243, 10.5922, 9.8635, 11.6428, 10.7765, 11.4582, 6.9928, 8.2819, 10.3194, 10.7378, 8.7515, 8.5964, 9.9458, 10.2498, 13.928, 9.2321, 11.0749, 6.5743, 9.7992], 0.9741840713997628, 0.48301328858315123),
    (&[0.5288, 0.1836, -0.783, -0.644, 0.9433, -0.7923, -0.6518, 0.2835, -0.4527, -0.809, -0.9577, -0.4861, 0.5082, -0.9888, 0.9089, -0.4424, 0.6527, 0.8589, 0.2667, -0.9032, -0.9665, -0.4981, 0.2946, -0.3995, -0.7087, -0.4804, 0.4651, -0.3189, 0.6209, -0.6305, -0.0856, 0.364, -0.5341, -0.6137, 0.0437, 0.76, 0.1782, 0.8934, 0.8544, 0.6956, -0.842, 0.9232, 0.6039, 0.6844, 0.4034, -0.6142, -0.3487, 0.7249, 0.2586, -0.9487], 0.9037436734674137, 0.0006401908019054385),
    (&[-2.1345, -2.4419, -1.0624, -1.2125, -1.8477, -1.2668, -2.3966, -2.665, -1.8737, -1.0984, -2.1142, -1.623, -1.3706, -1.9778, -1.5795, -2.3304, -1.355, -1.7895, -1.9662, -2.3149, -3.4278, -1.8406, -1.9985, -2.0581, -2.1986, -1.0577, -2.0434, -2.0408, -2.0017, -2.536, 1.7318, 1.8279, 2.1584, 2.2991, 1.6223, 2.5284, 0.805, 2.757, 2.3291, 2.4131, 2.0696, 2.2068, 2.1656, 1.8264, 1.5456, 2.2093, 2.1348, 1.6637, 2.0293, 1.6367, 3.1974, 2.2735, 2.3229, 2.4563, 0.2458, 2.0162, 2.5608, 1.4452, 2.1821, 2.3019], 0.8344866534613362, 1.0937051214985526e-06),
    (&[5.7515, 9.2857, 2.1708, 0.5644, 0.2241, 4.8443, 2.2942, 0.3802, 6.566, 5.2718, 5.8425, 2.0422, 1.3187, 0.3437, 0.2876, 0.5541, 2.2243, 3.6251, 3.5057, 14.2971, 1.1878, 1.0716, 0.2985, 3.203, 4.7901, 15.8596, 0.7792, 1.1221, 2.4863, 0.8581, 0.2219, 0.3559, 0.9664, 0.4844, 0.0658, 0.3618, 15.0745, 3.8842, 2.2505, 5.6911, 2.8524, 2.1519, 9.036, 0.8661, 2.4612, 0.3559, 0.0069, 0.5471, 1.535, 6.6698, 0.5552, 0.3701, 2.1413, 4.3634, 0.8962, 0.7055, 0.537, 0.6102, 2.645, 10.2647, 0.2549, 6.5844, 4.6879, 4.6099, 2.735, 0.8612, 3.892, 3.7154, 0.7422, 11.0002, 0.2362, 5.2707, 1.5702, 0.7307, 0.1946, 9.1001, 0.0607, 1.8066, 1.9939, 5.2588], 0.7782390660380026, 1.217652721365647e-09),
    (&[8.5045, 10.2574, 8.7207, 13.6926, 11.3283, 9.7427, 8.4062, 7.9835, 13.1796, 9.6957, 12.1031, 11.7681, 14.1836, 10.2343, 9.654, 9.6812, 9.059, 11.3016, 11.5618, 11.9439, 3.1892, 8.5556, 8.8491, 8.3969, 12.3611, 8.9461, 8.2837, 10.6279, 9.0318, 10.0123, 8.5591, 8.2606, 11.3129, 9.9553, 8.6917, 9.7276, 10.2958, 7.2666, 10.5268, 11.12, 8.763, 10.4855, 6.0321, 8.9135, 11.2677, 9.3139, 12.0418, 10.2301, 10.3263, 6.0314, 7.0261, 9.3272, 9.7736, 12.0732, 9.9609, 12.1167, 7.5268, 13.9193, 8.8738, 8.0664, 7.6836, 6.807, 10.6461, 8.7119, 7.741, 9.135, 8.5746, 12.7313, 9.2008, 10.3725, 9.1073, 12.8465, 8.9191, 9.2206, 7.4351, 10.5406, 10.3259, 12.7505, 12.7129, 14.6095, 10.9863, 11.0507, 9.4801, 10.6487, 8.4494, 9.5997, 9.9698, 11.3597, 11.8473, 7.7391, 8.1667, 9.4175, 9.1779, 9.1925, 6.9877, 9.8522, 8.9159, 10.4015, 10.2873, 8.0689, 10.8021, 10.9091, 6.8575, 11.2324, 9.1755, 10.31, 10.0606, 9.0335, 6.4364, 10.081, 8.8493, 9.4487, 12.845, 7.101, 8.8414, 11.4121, 8.5612, 13.3932, 13.0492, 6.5391], 0.9877550109379545, 0.35658674300255),
];

/// Seven noisy copies of a uniform target followed by five pure-noise
/// columns.
pub fn signal_noise_pool(seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut r = ChaCha8Rng::seed_from_u64(100 + seed);
    let target: Vec<f64> = (0..200).map(|_| r.random_range(0.0..100.0)).collect();
    let noise = Normal::new(0.0, 15.0).unwrap();
    let mut cols: Vec<Vec<f64>> = (0..7)
        .map(|_| target.iter().map(|t| t + noise.sample(&mut r)).collect())
        .collect();
    cols.extend((0..5).map(|_| (0..200).map(|_| r.random_range(0.0..100.0)).collect::<Vec<f64>>()));
    (cols, target)
}

/// Best simple-average R² over every non-empty subset, with its bit mask.
pub fn best_subset(cols: &[Vec<f64>], target: &[f64]) -> (f64, u32) {
    let n = cols.len();
    let mut best = (0.0, 0u32);
    for mask in 1u32..(1 << n) {
        let picked: Vec<Vec<f64>> = (0..n).filter(|j| mask >> j & 1 == 1).map(|j| cols[j].clone()).collect();
        let r2 = squared_pearson(&combine_simple(&picked).unwrap(), target);
        if r2 > best.0 {
            best = (r2, mask);
        }
    }
    best
}
