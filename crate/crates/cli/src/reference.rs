//! Published benchmark values for the Sun–Jupiter Hill four-body problem,
//! indexed by the anchor abscissa x* ∈ {0.615, 0.62, 0.625, 0.63}.

pub const X_STAR: [f64; 4] = [0.615, 0.62, 0.625, 0.63];

pub const H_L1: f64 = -2.16286;

/// Lyapunov orbits: (h, ẏ at the anchor, T).
pub const ORBITS: [(f64, f64, f64); 4] = [
    (-2.07715457, 0.48123483, 3.05967299),
    (-2.08671819, 0.45248801, 3.05678890),
    (-2.09582648, 0.42353750, 3.05406407),
    (-2.10446079, 0.39437305, 3.05150060),
];

/// Homoclinic points (x, ẏ) with y = pₓ = 0.
pub const HOM_Z1: [(f64, f64); 4] =
    [(-0.14646739, -3.09272039), (-0.13707337, -3.23629663), (-0.12723761, -3.40227909), (-0.11666113, -3.60215892)];
pub const HOM_Z2: [(f64, f64); 4] =
    [(-0.02675921, -8.40169252), (-0.03085457, -7.78778643), (-0.03563430, -7.20679133), (-0.04141244, -6.64009686)];

/// Heteroclinic points (y, ẋ) with x = ẏ = 0 (upper signs).
pub const HET_Z1: [(f64, f64); 4] =
    [(-0.32513154, 1.41324947), (-0.31736214, 1.45901631), (-0.30951753, 1.50672557), (-0.30157444, 1.55664227)];
pub const HET_Z2: [(f64, f64); 4] =
    [(-0.13480207, 3.26837828), (-0.13957356, 3.18684274), (-0.14460595, 3.10468687), (-0.14991892, 3.02186543)];

/// Foot-point rows: (x, y, ẋ, ẏ) with upper signs, and |θ±|.
pub type FootRow = ([f64; 4], f64);

pub const HOM_FOOT_Z1: [FootRow; 4] = [
    ([0.61500027, -0.00000005, -0.00000100, 0.48123436], 0.27849625),
    ([0.62000004, -0.00000011, -0.00000028, 0.45248794], 0.28369125),
    ([0.62500023, -0.00000006, -0.00000083, 0.42353712], 0.29106293),
    ([0.63000040, -0.00000000, 0.00000132, 0.39437240], 0.30161988),
];
pub const HOM_FOOT_Z2: [FootRow; 4] = [
    ([0.61499366, 0.00000076, 0.00001982, 0.48124537], 0.49677491),
    ([0.61999254, 0.00000079, 0.00002317, 0.45250024], 0.48835256),
    ([0.62499943, -0.00000216, 0.0000008, 0.42353842], 0.47799047),
    ([0.63000023, 0.00000018, 0.0000008, 0.39437267], 0.46465922),
];
pub const HET_FOOT_Z1: [FootRow; 4] = [
    ([0.61500108, 0.00000001, 0.00000360, 0.48123302], 0.56696772),
    ([0.62000004, 0.00000010, 0.00000045, 0.45248793], 0.55400246),
    ([0.62500059, 0.00000015, 0.00000215, 0.42353653], 0.54075381),
    ([-0.63000045, 0.00000009, 0.00000163, -0.39437232], 0.52702772),
];
pub const HET_FOOT_Z2: [FootRow; 4] = [
    ([0.61499894, -0.00000004, 0.00000329, 0.48123659], 0.04588521),
    ([0.61999901, -0.00000003, 0.00000316, 0.45248962], 0.05160310),
    ([0.62499909, 0.0, 0.00000300, 0.42353896], 0.05811547),
    ([0.62999918, -0.00000002, 0.00000285, 0.39437436], 0.06560153),
];

/// ∫ −∂S/∂θ∘σ₀ dθ over the z₁ channel window.
pub const BIRKHOFF_HOM: [f64; 4] = [4.504268037535489, 4.522975396978230, 4.530206829459286, 4.546613141589633];
pub const BIRKHOFF_HET: [f64; 4] = [6.185282908819167, 6.375516217294260, 6.551536879012402, 6.713775974499518];

/// Index of x* among the tabulated anchors.
pub fn row(x_star: f64) -> Option<usize> {
    X_STAR.iter().position(|x| (x - x_star).abs() < 1e-9)
}
