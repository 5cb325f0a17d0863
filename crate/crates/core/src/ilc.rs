//! Cycle-to-cycle learning: the filtered input update and the input
//! scheduling contract.

use crate::lifted::LiftedFilters;
use crate::{Error, Result, HOURS_PER_CYCLE};
use nalgebra::{DMatrix, DVector};

/// One cycle's worth of hourly learned inputs.
#[derive(Debug, Clone)]
pub struct CyclePlan {
    /// Cycle index this plan applies to.
    pub cycle: usize,
    /// Hourly inputs [W]; column h is the input held through hour h.
    pub inputs: DMatrix<f64>,
}

impl CyclePlan {
    /// The all-zero plan (the learning sequence always starts here).
    pub fn zero(cycle: usize, n_nodes: usize) -> Self {
        Self {
            cycle,
            inputs: DMatrix::zeros(n_nodes, HOURS_PER_CYCLE),
        }
    }

    /// Reshapes a stacked hour-major 24N vector into a plan.
    pub fn from_stacked(cycle: usize, n_nodes: usize, u: &DVector<f64>) -> Result<Self> {
        if u.len() != n_nodes * HOURS_PER_CYCLE {
            return Err(Error::Dimension(format!(
                "stacked input has length {}, expected {}",
                u.len(),
                n_nodes * HOURS_PER_CYCLE
            )));
        }
        Ok(Self {
            cycle,
            inputs: DMatrix::from_column_slice(n_nodes, HOURS_PER_CYCLE, u.as_slice()),
        })
    }

    /// Hour-major stacked input vector (the lifted ordering).
    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_column_slice(self.inputs.as_slice())
    }

    pub fn is_finite(&self) -> bool {
        self.inputs.iter().all(|v| v.is_finite())
    }
}

/// Learning controller state carried across cycles.
#[derive(Debug, Clone)]
pub struct IlcState {
    /// Current stacked input u^c (24N, hour-major).
    pub u: DVector<f64>,
    /// Lifted Q-filter and learning matrix.
    pub filters: LiftedFilters,
    /// ‖e^c‖₂ per processed measurement, oldest first.
    pub error_history: Vec<f64>,
    /// Index of the cycle the current input belongs to.
    pub cycle: usize,
    pub n_nodes: usize,
}

impl IlcState {
    /// Fresh controller with the zero initial input.
    pub fn new(filters: LiftedFilters, n_nodes: usize) -> Result<Self> {
        if filters.q.nrows() != n_nodes * HOURS_PER_CYCLE {
            return Err(Error::Dimension(format!(
                "Q-filter is {}×{} but the network has {} nodes",
                filters.q.nrows(),
                filters.q.ncols(),
                n_nodes
            )));
        }
        Ok(Self {
            u: DVector::zeros(n_nodes * HOURS_PER_CYCLE),
            filters,
            error_history: Vec::new(),
            cycle: 0,
            n_nodes,
        })
    }

    /// The plan carrying the controller's current input.
    pub fn current_plan(&self) -> CyclePlan {
        CyclePlan::from_stacked(self.cycle, self.n_nodes, &self.u)
            .expect("state dimensions are kept consistent")
    }
}

/// Filtered input update u^{c+1} = Q(u^c − L y^c) from the previous
/// cycle's measured hourly energies [W·h].
///
/// With the default learning matrix L = −κI this adds κ times the
/// measured low-level share to the feedforward input, which is the
/// direction that reduces it (the plant's input-to-energy gain is
/// negative). Records ‖e^c‖₂ = ‖y^c‖₂ and advances the cycle index.
pub fn learning_update(state: &mut IlcState, y_prev: &DVector<f64>) -> Result<CyclePlan> {
    let dim = state.n_nodes * HOURS_PER_CYCLE;
    if y_prev.len() != dim {
        return Err(Error::Dimension(format!(
            "measurement has length {}, expected {dim}",
            y_prev.len()
        )));
    }
    if y_prev.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams(
            "measurement contains non-finite entries".into(),
        ));
    }
    state.error_history.push(y_prev.norm());
    let inner = &state.u - &state.filters.l * y_prev;
    state.u = &state.filters.q * inner;
    state.cycle += 1;
    Ok(state.current_plan())
}

/// Hours before the next cycle at which every input slot is already
/// determined by available measurements: 24 minus the hour-level upper
/// bandwidth of Q_h. A filter needing the whole previous day offers no
/// scheduling slack and returns 0.
pub fn scheduling_horizon(filters: &LiftedFilters) -> usize {
    let n = filters.n_nodes().max(1);
    let q = &filters.q;
    let hours = q.nrows() / n;
    let mut ub = 0usize;
    for i in 0..q.nrows() {
        for j in 0..q.ncols() {
            if q[(i, j)] != 0.0 {
                let (bi, bj) = (i / n, j / n);
                if bj > bi {
                    ub = ub.max(bj - bi);
                }
            }
        }
    }
    if ub >= hours - 1 {
        0
    } else {
        hours - ub
    }
}
