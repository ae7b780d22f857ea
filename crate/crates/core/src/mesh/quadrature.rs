/// Symmetric quadrature on the reference triangle, in barycentric
/// coordinates, with weights normalized to sum to 1 (multiply by the element
/// area).
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: u32,
}

impl Quadrature {
    /// The cheapest stored rule that integrates polynomials of total degree
    /// `degree` exactly. Degrees above 6 are not available.
    pub fn triangle(degree: u32) -> Quadrature {
        match degree {
            0 | 1 => Quadrature {
                points: vec![[1.0 / 3.0; 3]],
                weights: vec![1.0],
                degree: 1,
            },
            2 => {
                let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
                Quadrature {
                    points: vec![[a, b, b], [b, a, b], [b, b, a]],
                    weights: vec![1.0 / 3.0; 3],
                    degree: 2,
                }
            }
            3..=6 => dunavant6(),
            _ => panic!("no triangle rule of degree {degree}"),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Dunavant's 12-point rule, exact through degree 6.
fn dunavant6() -> Quadrature {
    let orbits3 = [
        (0.116_786_275_726_379, 0.501_426_509_658_179, 0.249_286_745_170_910),
        (0.050_844_906_370_207, 0.873_821_971_016_996, 0.063_089_014_491_502),
    ];
    let (w6, a, b, c) = (
        0.082_851_075_618_374,
        0.053_145_049_844_817,
        0.310_352_451_033_784,
        0.636_502_499_121_399,
    );
    let mut points = Vec::with_capacity(12);
    let mut weights = Vec::with_capacity(12);
    for (w, p, q) in orbits3 {
        for bary in [[p, q, q], [q, p, q], [q, q, p]] {
            points.push(bary);
            weights.push(w);
        }
    }
    for bary in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        points.push(bary);
        weights.push(w6);
    }
    Quadrature {
        points,
        weights,
        degree: 6,
    }
}
