use crate::Point;

/// Quadrature on the reference triangle in barycentric coordinates.
/// Weights sum to the reference area 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: u32,
}

impl QuadratureRule {
    /// The cheapest built-in rule exact for polynomials of `degree`
    /// (up to 4).
    pub fn triangle(degree: u32) -> Self {
        match degree {
            0 | 1 => Self {
                points: vec![[1.0 / 3.0; 3]],
                weights: vec![0.5],
                degree: 1,
            },
            2 => {
                let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
                Self {
                    points: vec![[a, b, b], [b, a, b], [b, b, a]],
                    weights: vec![1.0 / 6.0; 3],
                    degree: 2,
                }
            }
            _ => {
                let (a1, b1, w1) = (
                    0.108_103_018_168_070,
                    0.445_948_490_915_965,
                    0.223_381_589_678_011,
                );
                let (a2, b2, w2) = (
                    0.816_847_572_980_459,
                    0.091_576_213_509_771,
                    0.109_951_743_655_322,
                );
                Self {
                    points: vec![
                        [a1, b1, b1],
                        [b1, a1, b1],
                        [b1, b1, a1],
                        [a2, b2, b2],
                        [b2, a2, b2],
                        [b2, b2, a2],
                    ],
                    weights: [w1, w1, w1, w2, w2, w2].iter().map(|w| 0.5 * w).collect(),
                    degree: 4,
                }
            }
        }
    }

    /// Physical points and weights on the triangle `v`, whose area is `area`.
    pub fn map(
        &self,
        v: &[Point; 3],
        area: f64,
    ) -> impl Iterator<Item = (Point, [f64; 3], f64)> + '_ {
        let v = *v;
        self.points.iter().zip(&self.weights).map(move |(l, w)| {
            let x = [
                l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
                l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
            ];
            (x, *l, 2.0 * area * w)
        })
    }

    pub fn integrate(&self, v: &[Point; 3], area: f64, f: impl Fn(Point) -> f64) -> f64 {
        self.map(v, area).map(|(x, _, w)| w * f(x)).sum()
    }
}

/// Three-point Gauss-Legendre rule on `[0, 1]`, exact to degree 5.
pub fn gauss3() -> [(f64, f64); 3] {
    let d = 0.5 * (0.6f64).sqrt();
    [
        (0.5 - d, 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 + d, 5.0 / 18.0),
    ]
}
