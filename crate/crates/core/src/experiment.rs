//! End-to-end runs: design, label, simulate, and sweep a loss probability.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hr::{self, DesignConstants, DesignParams, SourceModel};
use crate::labeling::{assign, AssignOptions, IndexAssignment, LatticeSetup, DEFAULT_N_PI_CAP};
use crate::lattice::{sphere_second_moment, Lattice, LatticeKind};
use crate::loss::ChannelModel;
use crate::sim::{self, SimConfig, SimReport};
use crate::sublattice::admissible_indices;

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub lattice: LatticeKind,
    pub source: SourceModel,
    pub channel: ChannelModel,
    /// Target sum of side entropies, bits per dimension.
    pub rstar: f64,
    /// Rate fractions; equal split when absent.
    pub rate_split: Option<Vec<f64>>,
    pub psi: Option<f64>,
    /// Fixed index values instead of the optimized ones.
    pub indices: Option<Vec<u64>>,
    pub vector_count: usize,
    pub seed: u64,
    pub n_pi_cap: u64,
    pub exec: Execution,
}

impl Experiment {
    pub fn new(lattice: LatticeKind, source: SourceModel, channel: ChannelModel, rstar: f64) -> Self {
        Experiment {
            lattice,
            source,
            channel,
            rstar,
            rate_split: None,
            psi: None,
            indices: None,
            vector_count: 200_000,
            seed: 1,
            n_pi_cap: DEFAULT_N_PI_CAP,
            exec: Execution::default(),
        }
    }

    pub fn k(&self) -> usize {
        self.channel.k()
    }

    /// Expansion factor and whether it fell back to the default of 1.
    pub fn psi(&self) -> (f64, bool) {
        match self.psi {
            Some(p) => (p, false),
            None => hr::default_psi(self.lattice.dim(), self.k()),
        }
    }

    pub fn rate_split(&self) -> Vec<f64> {
        self.rate_split
            .clone()
            .unwrap_or_else(|| vec![1.0 / self.k() as f64; self.k()])
    }

    pub fn constants(&self) -> Result<DesignConstants> {
        Ok(DesignConstants {
            psi: self.psi().0,
            g_c: self.lattice.second_moment(),
            g_s: sphere_second_moment(self.lattice.dim())?,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.source.dim != self.lattice.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.lattice.dim(),
                got: self.source.dim,
            });
        }
        if let Some(a) = &self.rate_split {
            if a.len() != self.k() {
                return Err(Error::Mismatch(format!("{} rate fractions for {} descriptions", a.len(), self.k())));
            }
        }
        Ok(())
    }

    /// Index values and cell volume, either optimized or from the fixed
    /// indices with `nu` rescaled to meet the entropy target.
    pub fn design(&self) -> Result<DesignParams> {
        self.validate()?;
        let c = self.constants()?;
        let unit = Lattice::unit(self.lattice);
        match &self.indices {
            None => hr::design(&self.source, self.rstar, &self.rate_split(), &c, &self.channel, |max| {
                admissible_indices(&unit, max).into_iter().map(|(n, _)| n).collect()
            }),
            Some(n) => {
                if n.len() != self.k() {
                    return Err(Error::Mismatch(format!("{} indices for {} descriptions", n.len(), self.k())));
                }
                let nu = hr::rescaled_nu(n, &self.source, self.rstar);
                let nf: Vec<f64> = n.iter().map(|&x| x as f64).collect();
                let (rc, ri) = hr::rates(nu, &nf, &self.source)?;
                Ok(DesignParams {
                    rstar: self.rstar,
                    a: ri.iter().map(|r| r / self.rstar).collect(),
                    psi: c.psi,
                    tau_star: hr::tau_star(&self.source, self.k(), self.rstar),
                    nu_opt: nu,
                    ni_opt: nf,
                    ni_snapped: n.clone(),
                    nu_rescaled: nu,
                    rc_opt: rc,
                    rc_snapped: rc,
                    ri_snapped: ri,
                })
            }
        }
    }

    /// Labels the designed lattices.
    pub fn assignment(&self, design: &DesignParams) -> Result<IndexAssignment> {
        let central = Lattice::with_volume(self.lattice, design.nu_rescaled)?;
        let setup = LatticeSetup::from_indices(central, &design.ni_snapped)?;
        let opts = AssignOptions {
            n_pi_cap: self.n_pi_cap,
            exec: self.exec,
            ..AssignOptions::new(design.psi)
        };
        assign(&setup, &self.channel, &opts)
    }

    pub fn simulate(&self, asg: &IndexAssignment) -> Result<SimReport> {
        sim::run(&SimConfig {
            vector_count: self.vector_count,
            seed: self.seed,
            source: self.source,
            channel: self.channel.clone(),
            assignment: asg,
            collect_per_subset: true,
            exec: self.exec,
        })
    }

    /// Design, label and simulate in one go.
    pub fn run(&self) -> Result<RunOutcome> {
        let design = self.design()?;
        let assignment = self.assignment(&design)?;
        let report = self.simulate(&assignment)?;
        Ok(RunOutcome {
            design,
            assignment,
            report,
        })
    }

    /// The same experiment with loss probability `index` set to `p`.
    pub fn with_loss(&self, index: usize, p: f64) -> Result<Self> {
        let mut loss = self.channel.loss().to_vec();
        if index >= loss.len() {
            return Err(Error::OutOfRange {
                what: "sweep parameter",
                detail: format!("p{index} with {} descriptions", loss.len()),
            });
        }
        loss[index] = p;
        Ok(Experiment {
            channel: ChannelModel::new(loss)?,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub design: DesignParams,
    pub assignment: IndexAssignment,
    pub report: SimReport,
}

/// One point of a loss-probability sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub design: DesignParams,
    pub report: SimReport,
}

/// Re-designs, re-labels and re-simulates for each value of loss
/// probability `index`, keeping the seed fixed.
pub fn sweep(exp: &Experiment, index: usize, values: &[f64]) -> Result<Vec<SweepPoint>> {
    values
        .iter()
        .map(|&v| {
            let e = exp.with_loss(index, v)?;
            let out = e.run()?;
            Ok(SweepPoint {
                value: v,
                design: out.design,
                report: out.report,
            })
        })
        .collect()
}
