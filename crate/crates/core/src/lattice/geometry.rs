use serde::{Deserialize, Serialize};

use super::{LatticeConfig, Vec3};
use crate::rng::{counter_uniform, site_key};
use crate::{Error, PhysicalConstants, Result};

const FCC_BASIS: [Vec3; 4] = [
    [0.0, 0.0, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
    [0.5, 0.5, 0.0],
];

const DIAMOND_SHIFT: Vec3 = [0.25, 0.25, 0.25];

/// Occupancy channels of the counter generator.
pub(crate) const CHANNEL_CARBON: u64 = 0;
pub(crate) const CHANNEL_ELECTRON: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub position: Vec3,
    pub key: u64,
}

impl Site {
    pub fn is_origin(&self) -> bool {
        self.position.iter().all(|c| c.abs() < 1e-12)
    }
}

fn basis(consts: &PhysicalConstants) -> Vec<Vec3> {
    let mut b = FCC_BASIS.to_vec();
    if consts.atoms_per_cell == 8 {
        b.extend(FCC_BASIS.iter().map(|p| {
            [
                p[0] + DIAMOND_SHIFT[0],
                p[1] + DIAMOND_SHIFT[1],
                p[2] + DIAMOND_SHIFT[2],
            ]
        }));
    }
    b
}

/// All lattice sites inside the cube `[-half_width, half_width]^3`, in a
/// fixed order. The origin is always a site.
pub fn enumerate_sites(consts: &PhysicalConstants, half_width: f64) -> Vec<Site> {
    let a = consts.a_lattice;
    let basis = basis(consts);
    let tol = 1e-9 * a;
    let n = (half_width / a).ceil() as i64 + 1;
    let mut sites = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                for (bi, b) in basis.iter().enumerate() {
                    let p = [
                        (i as f64 + b[0]) * a,
                        (j as f64 + b[1]) * a,
                        (k as f64 + b[2]) * a,
                    ];
                    if p.iter().all(|c| c.abs() <= half_width + tol) {
                        sites.push(Site {
                            position: p,
                            key: site_key(i, j, k, bi),
                        });
                    }
                }
            }
        }
    }
    sites
}

/// One realization of a dilute lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinLattice {
    pub carbon_positions: Vec<Vec3>,
    pub electron_positions: Vec<Vec3>,
    pub config: LatticeConfig,
    pub realization: u64,
}

impl SpinLattice {
    /// Lattice from explicit positions; used for hand-built test geometries.
    pub fn from_positions(
        carbon_positions: Vec<Vec3>,
        electron_positions: Vec<Vec3>,
        config: LatticeConfig,
    ) -> Self {
        Self {
            carbon_positions,
            electron_positions,
            config,
            realization: 0,
        }
    }

    pub fn volume_nm3(&self) -> f64 {
        self.config.lattice_size_nm.powi(3)
    }

    pub fn carbon_density(&self) -> f64 {
        self.carbon_positions.len() as f64 / self.volume_nm3()
    }
}

/// First realization for `config`.
pub fn build_lattice(config: &LatticeConfig, consts: &PhysicalConstants) -> Result<SpinLattice> {
    build_realization(config, consts, 0)
}

/// Realization `realization` for `config`. Carbon occupancy is Bernoulli(eta)
/// per site; electrons occupy sites with probability ppm * 1e-6 and take
/// precedence over carbon.
pub fn build_realization(
    config: &LatticeConfig,
    consts: &PhysicalConstants,
    realization: u64,
) -> Result<SpinLattice> {
    consts.validate()?;
    config.validate(consts)?;
    let sites = enumerate_sites(consts, 0.5 * config.lattice_size_nm);
    if sites.len() < 2 {
        return Err(Error::degenerate(format!(
            "box of {} nm holds {} site(s); at least 2 required",
            config.lattice_size_nm,
            sites.len()
        )));
    }
    let p_electron = config.electron_concentration_ppm * 1e-6;
    let mut carbons = Vec::new();
    let mut electrons = Vec::new();
    for s in &sites {
        if config.central_electron && s.is_origin() {
            electrons.push(s.position);
            continue;
        }
        if p_electron > 0.0
            && counter_uniform(config.seed, realization, s.key, CHANNEL_ELECTRON) < p_electron
        {
            electrons.push(s.position);
        } else if counter_uniform(config.seed, realization, s.key, CHANNEL_CARBON)
            < config.enrichment_eta
        {
            carbons.push(s.position);
        }
    }
    Ok(SpinLattice {
        carbon_positions: carbons,
        electron_positions: electrons,
        config: config.clone(),
        realization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn site_density_matches_convention() {
        let c = consts();
        let half = 2.0;
        let n = enumerate_sites(&c, half).len() as f64;
        let density = n / (2.0 * half).powi(3);
        // boundary sites make the finite-box count slightly high
        assert!((density / c.site_density() - 1.0).abs() < 0.15, "{density}");
    }

    #[test]
    fn no_duplicate_sites() {
        let sites = enumerate_sites(&consts(), 1.2);
        let mut keys: Vec<u64> = sites.iter().map(|s| s.key).collect();
        keys.sort_unstable();
        keys.dedup();
        assert_eq!(keys.len(), sites.len());
        for (i, a) in sites.iter().enumerate() {
            for b in &sites[i + 1..] {
                let d = super::super::norm(&super::super::sub(&a.position, &b.position));
                assert!(d > 0.1);
            }
        }
    }

    #[test]
    fn full_enrichment_density_per_cubic_nm() {
        // half-open cube whose edge is a whole number of cells
        let cfg = LatticeConfig::new(1.0, 6.0);
        let l = build_lattice(&cfg, &consts()).unwrap();
        let h = 6.0 * 0.35;
        let n = l
            .carbon_positions
            .iter()
            .filter(|p| p.iter().all(|c| *c >= -h && *c < h))
            .count();
        let per_nm3 = n as f64 / (2.0 * h).powi(3);
        assert!((per_nm3 - 92.0).abs() < 2.0, "{per_nm3}");
    }

    #[test]
    fn natural_abundance_14nm_box() {
        let cfg = LatticeConfig::new(0.011, 14.0).with_seed(5);
        let l = build_lattice(&cfg, &consts()).unwrap();
        let n = l.carbon_positions.len() as f64;
        let expected = 0.011 * consts().site_density() * 14f64.powi(3);
        assert!((n - expected).abs() < 5.0 * expected.sqrt(), "{n} vs {expected}");
        // the published figure is "about 2500"
        assert!((2300.0..3100.0).contains(&n));
    }

    #[test]
    fn tiny_enrichment_gives_no_carbons() {
        let cfg = LatticeConfig::new(1e-12, 2.0);
        let l = build_lattice(&cfg, &consts()).unwrap();
        assert!(l.carbon_positions.is_empty());
    }

    #[test]
    fn deterministic_for_seed() {
        let cfg = LatticeConfig::new(0.1, 3.0).with_seed(11).with_electrons(1000.0);
        let a = build_realization(&cfg, &consts(), 4).unwrap();
        let b = build_realization(&cfg, &consts(), 4).unwrap();
        assert_eq!(a, b);
        let c = build_realization(&cfg, &consts(), 5).unwrap();
        assert_ne!(a.carbon_positions, c.carbon_positions);
    }

    #[test]
    fn central_electron_at_origin() {
        let cfg = LatticeConfig::new(1.0, 2.0).with_central_electron();
        let l = build_lattice(&cfg, &consts()).unwrap();
        assert_eq!(l.electron_positions, vec![[0.0, 0.0, 0.0]]);
        assert!(l
            .carbon_positions
            .iter()
            .all(|p| p.iter().any(|c| c.abs() > 1e-12)));
    }

    #[test]
    fn nested_boxes_share_occupancy() {
        let small = build_lattice(&LatticeConfig::new(0.3, 2.0).with_seed(9), &consts()).unwrap();
        let big = build_lattice(&LatticeConfig::new(0.3, 4.0).with_seed(9), &consts()).unwrap();
        let inner: Vec<_> = big
            .carbon_positions
            .iter()
            .filter(|p| p.iter().all(|c| c.abs() <= 1.0 + 1e-9))
            .copied()
            .collect();
        assert_eq!(inner.len(), small.carbon_positions.len());
    }

    #[test]
    fn rejects_invalid_configs() {
        let c = consts();
        assert!(build_lattice(&LatticeConfig::new(0.0, 2.0), &c).is_err());
        assert!(build_lattice(&LatticeConfig::new(1.5, 2.0), &c).is_err());
        assert!(build_lattice(&LatticeConfig::new(0.5, 0.6), &c).is_err());
        let tilted = LatticeConfig::new(0.5, 2.0).with_field_direction([0.0, 0.0, 1.1]);
        assert!(build_lattice(&tilted, &c).is_err());
    }
}
