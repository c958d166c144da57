//! Peeling detector for the non-stationary regime.
//!
//! The receiver marks, for each user, the smallest set of strongest subarrays
//! carrying more than a fraction `p0` of its power, giving a bipartite
//! user/subarray graph. Detection then repeatedly picks the subarray with the
//! fewest undetected users, resolves those users inside that subarray by ZF
//! (one at a time, strongest post-processing SNR first) and cancels each
//! decided symbol from every antenna the user reaches. Energy a user leaves
//! outside its selected subarrays is not modeled and acts as interference.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::SubarrayPartition;
use crate::complexity::MulCounter;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Matrix, RMatrix, ZfBank, C64};
use crate::modem::{Constellation, Decision};

/// Binary incidence between subarrays (rows) and users (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    incidence: Matrix<bool>,
    /// `P_k^(b)` for every subarray/user pair, selected or not.
    subarray_power: RMatrix,
    /// `P_k = ||h_k||^2`.
    user_power: Vec<f64>,
}

impl BipartiteGraph {
    /// Graph from explicit `(subarray, user)` edges. Powers are set to one per
    /// edge so every user is fully covered.
    pub fn from_edges(subarrays: usize, users: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut incidence = Matrix::<bool>::zeros(subarrays, users);
        let mut subarray_power = RMatrix::zeros(subarrays, users);
        for &(b, k) in edges {
            if b >= subarrays || k >= users {
                return Err(Error::InvalidConfig(format!("edge ({b}, {k}) outside {subarrays}x{users}")));
            }
            incidence[(b, k)] = true;
            subarray_power[(b, k)] = 1.0;
        }
        let user_power: Vec<f64> = (0..users).map(|k| (0..subarrays).filter(|&b| incidence[(b, k)]).count() as f64).collect();
        if let Some(k) = user_power.iter().position(|&p| p == 0.0) {
            return Err(Error::StalledGraph(k));
        }
        Ok(BipartiteGraph { incidence, subarray_power, user_power })
    }

    pub fn subarrays(&self) -> usize {
        self.incidence.rows()
    }

    pub fn users(&self) -> usize {
        self.incidence.cols()
    }

    pub fn has_edge(&self, b: usize, k: usize) -> bool {
        self.incidence[(b, k)]
    }

    pub fn incidence(&self) -> &Matrix<bool> {
        &self.incidence
    }

    pub fn edge_count(&self) -> usize {
        self.incidence.as_slice().iter().filter(|&&e| e).count()
    }

    pub fn subarray_power(&self, b: usize, k: usize) -> f64 {
        self.subarray_power[(b, k)]
    }

    pub fn user_power(&self, k: usize) -> f64 {
        self.user_power[k]
    }

    /// Share of user `k`'s power captured by its selected subarrays.
    pub fn covered_fraction(&self, k: usize) -> f64 {
        let captured: f64 = (0..self.subarrays()).filter(|&b| self.has_edge(b, k)).map(|b| self.subarray_power[(b, k)]).sum();
        captured / self.user_power[k]
    }

    /// Selected subarrays of user `k`, ascending.
    pub fn subarrays_of(&self, k: usize) -> Vec<usize> {
        (0..self.subarrays()).filter(|&b| self.has_edge(b, k)).collect()
    }

    /// Users connected to subarray `b`, ascending.
    pub fn users_of(&self, b: usize) -> Vec<usize> {
        (0..self.users()).filter(|&k| self.has_edge(b, k)).collect()
    }
}

/// Greedy largest-first selection: keep adding the strongest remaining
/// subarray while the accumulated power is at most `p0 * total`. Power ties
/// go to the lower index; zero-power subarrays are never selected.
pub fn select_subarrays(powers: &[f64], total: f64, p0: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..powers.len()).collect();
    order.sort_by(|&a, &b| powers[b].total_cmp(&powers[a]).then(a.cmp(&b)));
    let mut acc = 0.0;
    let mut chosen = Vec::new();
    for b in order {
        if !(acc <= p0 * total) || !(powers[b] > 0.0) {
            break;
        }
        acc += powers[b];
        chosen.push(b);
    }
    chosen
}

pub fn build_graph(h: &CMatrix, partition: &SubarrayPartition, p0: f64, ops: &mut impl MulCounter) -> Result<BipartiteGraph> {
    if !(p0 > 0.0 && p0 <= 1.0) {
        return Err(Error::InvalidConfig(format!("p0 = {p0} outside (0, 1]")));
    }
    if h.rows() != partition.antennas() {
        return Err(Error::DimensionMismatch(format!("{} rows for {} antennas", h.rows(), partition.antennas())));
    }
    let (nb, nk) = (partition.len(), h.cols());
    let mut incidence = Matrix::<bool>::zeros(nb, nk);
    let mut subarray_power = RMatrix::zeros(nb, nk);
    let mut user_power = Vec::with_capacity(nk);
    ops.add((h.rows() * nk) as u64);
    for k in 0..nk {
        let sq: Vec<f64> = (0..h.rows()).map(|m| h[(m, k)].norm_sqr()).collect();
        let total: f64 = sq.iter().sum();
        if total == 0.0 {
            return Err(Error::UserUnreachable(k));
        }
        let powers: Vec<f64> = partition.blocks().iter().map(|blk| blk.iter().map(|&m| sq[m]).sum()).collect();
        for b in select_subarrays(&powers, total, p0) {
            incidence[(b, k)] = true;
        }
        for (b, p) in powers.into_iter().enumerate() {
            subarray_power[(b, k)] = p;
        }
        user_power.push(total);
    }
    Ok(BipartiteGraph { incidence, subarray_power, user_power })
}

/// Subarray degrees `S_b` and user degrees `U_k` over undetected users.
pub fn node_degrees(graph: &BipartiteGraph, detected: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let mut s = vec![0; graph.subarrays()];
    let mut u = vec![0; graph.users()];
    for b in 0..graph.subarrays() {
        for k in 0..graph.users() {
            if graph.has_edge(b, k) && !detected[k] {
                s[b] += 1;
                u[k] += 1;
            }
        }
    }
    (s, u)
}

/// `y <- y - h_k xhat`, skipping antennas the user does not reach.
pub fn subtract_interference(y: &mut [C64], h_k: &[C64], xhat: C64, ops: &mut impl MulCounter) {
    assert_eq!(y.len(), h_k.len(), "residual and channel column must have equal length");
    for (v, h) in y.iter_mut().zip(h_k) {
        if *h != C64::new(0.0, 0.0) {
            *v -= h * xhat;
            ops.add(1);
        }
    }
}

/// Value broadcast for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Cancellation {
    /// Reconstructed hard symbol.
    #[default]
    Hard,
    /// Raw ZF soft estimate.
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SicOptions {
    pub cancellation: Cancellation,
    /// Recompute post-processing SNRs after every cancellation inside a
    /// multiuser subarray; otherwise keep the first ordering.
    pub resort: bool,
}

impl Default for SicOptions {
    fn default() -> Self {
        SicOptions { cancellation: Cancellation::Hard, resort: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Singleton,
    Multiuser,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Singleton => "singleton",
            Branch::Multiuser => "multiuser",
        })
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "singleton" => Ok(Branch::Singleton),
            "multiuser" => Ok(Branch::Multiuser),
            other => Err(Error::Parse(format!("unknown branch {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeelEvent {
    pub step: usize,
    pub subarray: usize,
    pub branch: Branch,
    /// Undetected users of the subarray when it was selected, ascending.
    pub users: Vec<usize>,
    /// Detection order inside the subarray.
    pub order: Vec<usize>,
    /// Post-processing SNR of each user at the moment it was detected.
    pub snr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeelingTrace {
    pub events: Vec<PeelEvent>,
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for PeelingTrace {
    /// One line per event:
    /// `step=<i> subarray=<b> branch=<singleton|multiuser> users=<k,..> order=<k,..>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.events {
            writeln!(
                f,
                "step={} subarray={} branch={} users={} order={}",
                e.step,
                e.subarray,
                e.branch,
                join(&e.users),
                join(&e.order)
            )?;
        }
        Ok(())
    }
}

impl PeelingTrace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Parses the line log written by `Display`. SNR values are not logged
    /// and come back empty.
    pub fn parse_log(text: &str) -> Result<Self> {
        let mut events = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let mut fields = [""; 5];
            for (slot, key) in ["step", "subarray", "branch", "users", "order"].iter().enumerate() {
                let tok = line
                    .split_whitespace()
                    .find_map(|t| t.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                    .ok_or_else(|| Error::Parse(format!("missing {key} in {line:?}")))?;
                fields[slot] = tok;
            }
            let num = |t: &str| t.parse::<usize>().map_err(|e| Error::Parse(format!("{t:?}: {e}")));
            let list = |t: &str| t.split(',').filter(|s| !s.is_empty()).map(num).collect::<Result<Vec<_>>>();
            events.push(PeelEvent {
                step: num(fields[0])?,
                subarray: num(fields[1])?,
                branch: fields[2].parse()?,
                users: list(fields[3])?,
                order: list(fields[4])?,
                snr: Vec::new(),
            });
        }
        Ok(PeelingTrace { events })
    }

    /// Every user `0..users` detected exactly once and every event detects
    /// at least one user.
    pub fn is_complete(&self, users: usize) -> bool {
        let mut seen = vec![0usize; users];
        for e in &self.events {
            if e.order.is_empty() {
                return false;
            }
            for &k in &e.order {
                if k >= users {
                    return false;
                }
                seen[k] += 1;
            }
        }
        self.events.len() <= users && seen.iter().all(|&c| c == 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeelOutput {
    pub soft: Vec<C64>,
    pub decisions: Vec<Decision>,
    pub trace: PeelingTrace,
    /// Received vector after all cancellations.
    pub residual: Vec<C64>,
}

pub fn peel_detect<R: Rng + ?Sized>(
    graph: &BipartiteGraph,
    h: &CMatrix,
    y: &[C64],
    partition: &SubarrayPartition,
    rho: f64,
    rng: &mut R,
    options: SicOptions,
    ops: &mut impl MulCounter,
) -> Result<PeelOutput> {
    let nk = h.cols();
    if graph.users() != nk || graph.subarrays() != partition.len() || h.rows() != partition.antennas() || y.len() != h.rows() {
        return Err(Error::DimensionMismatch("graph, channel, partition and samples disagree".into()));
    }
    let constellation = Constellation::psk8();
    let mut residual = y.to_vec();
    let mut detected = vec![false; nk];
    let mut soft = vec![C64::new(0.0, 0.0); nk];
    let mut decisions: Vec<Option<Decision>> = vec![None; nk];
    let mut trace = PeelingTrace::default();
    let mut remaining_total = nk;
    let columns: Vec<Vec<C64>> = (0..nk).map(|k| h.column(k)).collect();

    while remaining_total > 0 {
        let (s, u) = node_degrees(graph, &detected);
        if let Some(k) = (0..nk).find(|&k| !detected[k] && u[k] == 0) {
            return Err(Error::StalledGraph(k));
        }
        let min = s.iter().copied().filter(|&d| d > 0).min().expect("undetected users have edges");
        let candidates: Vec<usize> = (0..s.len()).filter(|&b| s[b] == min).collect();
        let chosen = if candidates.len() == 1 { candidates[0] } else { candidates[rng.random_range(0..candidates.len())] };

        let users: Vec<usize> = graph.users_of(chosen).into_iter().filter(|&k| !detected[k]).collect();
        let antennas = partition.size(chosen);
        if users.len() > antennas {
            return Err(Error::SubarrayOverloaded { block: chosen, users: users.len(), antennas });
        }
        let h_b = partition.block_rows(h, chosen)?;
        let branch = if users.len() == 1 { Branch::Singleton } else { Branch::Multiuser };
        let mut pending = users.clone();
        let mut order = Vec::with_capacity(users.len());
        let mut snrs = Vec::with_capacity(users.len());
        let mut fixed_order: Option<Vec<usize>> = None;

        while !pending.is_empty() {
            let bank = ZfBank::new(&h_b.select_cols(&pending), ops)
                .map_err(|e| Error::BlockInfeasible { block: chosen, reason: e.to_string() })?;
            let pos = match &fixed_order {
                Some(fixed) => {
                    let next = fixed[order.len()];
                    pending.iter().position(|&k| k == next).expect("fixed order covers pending users")
                }
                None => {
                    // strongest first, ties to the lower user index
                    let best = (0..pending.len()).fold(0, |best, i| if bank.gain(i) > bank.gain(best) { i } else { best });
                    if !options.resort && pending.len() > 1 {
                        let mut by_gain: Vec<usize> = (0..pending.len()).collect();
                        by_gain.sort_by(|&a, &b| bank.gain(b).total_cmp(&bank.gain(a)).then(pending[a].cmp(&pending[b])));
                        fixed_order = Some(by_gain.into_iter().map(|i| pending[i]).collect());
                    }
                    best
                }
            };
            let k = pending[pos];
            let y_b = partition.block_vec(&residual, chosen)?;
            let estimate = bank.soft_one(&y_b, pos, ops);
            let decision = constellation.hard_decision(estimate)?;
            let broadcast = match options.cancellation {
                Cancellation::Hard => decision.symbol,
                Cancellation::Soft => estimate,
            };
            subtract_interference(&mut residual, &columns[k], broadcast, ops);
            soft[k] = estimate;
            decisions[k] = Some(decision);
            snrs.push(rho * bank.gain(pos));
            order.push(k);
            pending.remove(pos);
        }

        for &k in &users {
            detected[k] = true;
        }
        remaining_total -= users.len();
        trace.events.push(PeelEvent { step: trace.events.len(), subarray: chosen, branch, users, order, snr: snrs });
    }

    let decisions = decisions.into_iter().map(|d| d.expect("every user detected")).collect();
    Ok(PeelOutput { soft, decisions, trace, residual })
}

/// Hand-built five-user, five-subarray scenario (zero-based indices):
///
/// ```text
/// subarray 0: users 0, 2
/// subarray 1: user 1
/// subarray 2: users 2, 3
/// subarray 3: users 0, 3
/// subarray 4: users 1, 4
/// ```
///
/// Peeling resolves user 1 (subarray 1), then user 4 (subarray 4), then a
/// three-way degree-2 tie which `tie_seed` breaks toward subarray 2 (users 2
/// and 3 by in-subarray ZF), and finally user 0 alone.
#[derive(Debug, Clone)]
pub struct WorkedExample {
    pub graph: BipartiteGraph,
    pub h: CMatrix,
    pub partition: SubarrayPartition,
    pub symbols: Vec<C64>,
    pub labels: Vec<u8>,
    pub tie_seed: u64,
}

pub const WORKED_EXAMPLE_EDGES: [(usize, usize); 9] =
    [(0, 0), (0, 2), (1, 1), (2, 2), (2, 3), (3, 0), (3, 3), (4, 1), (4, 4)];

pub fn worked_example() -> WorkedExample {
    use crate::channel::{complex_gaussian, SubarrayLayout};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ANTENNAS_PER_SUBARRAY: usize = 4;
    let (nb, nk) = (5, 5);
    let graph = BipartiteGraph::from_edges(nb, nk, &WORKED_EXAMPLE_EDGES).expect("static edges are valid");
    let partition =
        SubarrayPartition::new(nb * ANTENNAS_PER_SUBARRAY, nb, SubarrayLayout::Contiguous).expect("uniform partition");
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let h = CMatrix::from_fn(nb * ANTENNAS_PER_SUBARRAY, nk, |m, k| {
        let g = complex_gaussian(&mut rng);
        if graph.has_edge(m / ANTENNAS_PER_SUBARRAY, k) { g } else { C64::new(0.0, 0.0) }
    });
    let c = Constellation::psk8();
    let labels = vec![5, 0, 3, 6, 1];
    let symbols = labels.iter().map(|&l| c.point_for_label(l)).collect();
    WorkedExample { graph, h, partition, symbols, labels, tie_seed: WORKED_EXAMPLE_TIE_SEED }
}

pub const WORKED_EXAMPLE_TIE_SEED: u64 = 0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_gaussian, SubarrayLayout};
    use crate::complexity::MulCount;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn powers_to_h(fracs: &[f64]) -> (CMatrix, SubarrayPartition) {
        let h = CMatrix::from_fn(fracs.len(), 1, |m, _| C64::new(fracs[m].sqrt(), 0.0));
        (h, SubarrayPartition::new(fracs.len(), fracs.len(), SubarrayLayout::Contiguous).unwrap())
    }

    #[test]
    fn greedy_selection_crosses_threshold() {
        assert_eq!(select_subarrays(&[0.5, 0.3, 0.15, 0.05], 1.0, 0.9), vec![0, 1, 2]);
        assert_eq!(select_subarrays(&[0.05, 0.15, 0.5, 0.3], 1.0, 0.9), vec![2, 3, 1]);
    }

    #[test]
    fn stops_once_threshold_exceeded() {
        // after 0.6 the accumulated power already exceeds 0.5
        assert_eq!(select_subarrays(&[0.6, 0.4], 1.0, 0.5), vec![0]);
    }

    #[test]
    fn full_threshold_takes_every_powered_subarray() {
        assert_eq!(select_subarrays(&[0.2, 0.0, 0.5, 0.3], 1.0, 1.0), vec![2, 3, 0]);
    }

    #[test]
    fn equal_power_ties_to_lower_index() {
        assert_eq!(select_subarrays(&[0.25, 0.25, 0.25, 0.25], 1.0, 0.3), vec![0, 1]);
    }

    #[test]
    fn build_graph_fractions() {
        let (h, p) = powers_to_h(&[0.5, 0.3, 0.15, 0.05]);
        let g = build_graph(&h, &p, 0.9, &mut ()).unwrap();
        assert_eq!(g.subarrays_of(0), vec![0, 1, 2]);
        assert!((g.covered_fraction(0) - 0.95).abs() < 1e-12);
        assert!(g.covered_fraction(0) > 0.9);
    }

    #[test]
    fn unreachable_user() {
        let h = CMatrix::from_fn(4, 2, |m, k| if k == 1 { C64::new(0.0, 0.0) } else { C64::new(m as f64 + 1.0, 0.0) });
        let p = SubarrayPartition::new(4, 2, SubarrayLayout::Contiguous).unwrap();
        assert_eq!(build_graph(&h, &p, 0.9, &mut ()), Err(Error::UserUnreachable(1)));
    }

    #[test]
    fn degrees() {
        let g = BipartiteGraph::from_edges(3, 2, &[(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)]).unwrap();
        assert_eq!(node_degrees(&g, &[false, false]), (vec![2, 2, 2], vec![3, 3]));
        assert_eq!(node_degrees(&g, &[true, true]), (vec![0, 0, 0], vec![0, 0]));
        let ex = worked_example();
        let (s, _) = node_degrees(&ex.graph, &[false; 5]);
        assert_eq!((s[0], s[1], s[4]), (2, 1, 2));
        let (s, _) = node_degrees(&ex.graph, &[false, true, false, false, false]);
        assert_eq!(s[4], 1);
    }

    #[test]
    fn graph_requires_edges_per_user() {
        assert_eq!(BipartiteGraph::from_edges(2, 2, &[(0, 0)]), Err(Error::StalledGraph(1)));
    }

    #[test]
    fn subtraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hk: Vec<C64> = (0..6).map(|_| complex_gaussian(&mut rng)).collect();
        let x = C64::new(0.0, 1.0);
        let mut y: Vec<C64> = hk.iter().map(|h| h * x).collect();
        subtract_interference(&mut y, &hk, x, &mut ());
        assert!(y.iter().all(|v| v.norm() < 1e-15));

        let y0: Vec<C64> = (0..6).map(|_| complex_gaussian(&mut rng)).collect();
        let mut y1 = y0.clone();
        subtract_interference(&mut y1, &hk, C64::new(0.0, 0.0), &mut ());
        assert_eq!(y0, y1);

        let mut y2 = y0.clone();
        let xhat = C64::new(0.3, -0.2);
        subtract_interference(&mut y2, &hk, xhat, &mut ());
        for m in 0..6 {
            assert_eq!(y2[m], y0[m] - hk[m] * xhat);
        }
    }

    #[test]
    fn worked_example_trace() {
        let ex = worked_example();
        let y = ex.h.mul_vec(&ex.symbols, &mut ());
        let mut rng = ChaCha8Rng::seed_from_u64(ex.tie_seed);
        let out = peel_detect(&ex.graph, &ex.h, &y, &ex.partition, f64::INFINITY, &mut rng, SicOptions::default(), &mut ()).unwrap();
        let t = &out.trace;
        assert_eq!(t.len(), 4);
        assert_eq!((t.events[0].subarray, &t.events[0].order[..]), (1, &[1][..]));
        assert_eq!((t.events[1].subarray, &t.events[1].order[..]), (4, &[4][..]));
        assert_eq!(t.events[2].subarray, 2);
        assert_eq!(t.events[2].branch, Branch::Multiuser);
        assert_eq!(t.events[2].users, vec![2, 3]);
        assert_eq!(t.events[3].order, vec![0]);
        assert!(t.is_complete(5));
        let labels: Vec<u8> = out.decisions.iter().map(|d| d.label).collect();
        assert_eq!(labels, ex.labels);
        assert!(out.residual.iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn trace_log_round_trip() {
        let ex = worked_example();
        let y = ex.h.mul_vec(&ex.symbols, &mut ());
        let mut rng = ChaCha8Rng::seed_from_u64(ex.tie_seed);
        let out = peel_detect(&ex.graph, &ex.h, &y, &ex.partition, 1.0, &mut rng, SicOptions::default(), &mut ()).unwrap();
        let log = out.trace.to_string();
        assert_eq!(log.lines().count(), 4);
        assert!(log.starts_with("step=0 subarray=1 branch=singleton users=1 order=1\n"));
        let back = PeelingTrace::parse_log(&log).unwrap();
        for (a, b) in back.events.iter().zip(&out.trace.events) {
            assert_eq!((a.step, a.subarray, a.branch, &a.users, &a.order), (b.step, b.subarray, b.branch, &b.users, &b.order));
        }
        assert!(PeelingTrace::parse_log("step=0 subarray=x").is_err());
    }

    #[test]
    fn block_diagonal_users_get_matched_filters() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = CMatrix::from_fn(8, 2, |m, k| if m / 4 == k { complex_gaussian(&mut rng) } else { C64::new(0.0, 0.0) });
        let p = SubarrayPartition::new(8, 2, SubarrayLayout::Contiguous).unwrap();
        let x = [C64::new(1.0, 0.0), C64::new(0.0, -1.0)];
        let noise: Vec<C64> = (0..8).map(|_| complex_gaussian(&mut rng) * 0.1).collect();
        let y: Vec<C64> = h.mul_vec(&x, &mut ()).iter().zip(&noise).map(|(a, b)| a + b).collect();
        let g = build_graph(&h, &p, 0.9, &mut ()).unwrap();
        let out = peel_detect(&g, &h, &y, &p, 100.0, &mut rng, SicOptions::default(), &mut ()).unwrap();
        for k in 0..2 {
            let hk = h.column(k);
            let n2: f64 = hk.iter().map(|z| z.norm_sqr()).sum();
            let mf: C64 = hk.iter().zip(&y).map(|(a, b)| a.conj() * b).sum::<C64>() / n2;
            assert!((out.soft[k] - mf).norm() < 1e-12);
        }
    }

    #[test]
    fn overloaded_subarray() {
        let g = BipartiteGraph::from_edges(2, 3, &[(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = CMatrix::from_fn(4, 3, |_, _| complex_gaussian(&mut rng));
        let p = SubarrayPartition::new(4, 2, SubarrayLayout::Contiguous).unwrap();
        let err = peel_detect(&g, &h, &[C64::new(0.0, 0.0); 4], &p, 1.0, &mut rng, SicOptions::default(), &mut ()).unwrap_err();
        assert!(matches!(err, Error::SubarrayOverloaded { users: 3, antennas: 2, .. }));
    }

    #[test]
    fn fixed_order_and_soft_cancellation_still_exact_when_noiseless() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = CMatrix::from_fn(16, 4, |_, _| complex_gaussian(&mut rng));
        let p = SubarrayPartition::new(16, 2, SubarrayLayout::Contiguous).unwrap();
        let c = Constellation::psk8();
        let x: Vec<C64> = (0..4).map(|i| c.points()[(3 * i + 1) % 8]).collect();
        let y = h.mul_vec(&x, &mut ());
        let g = build_graph(&h, &p, 1.0, &mut ()).unwrap();
        for options in [
            SicOptions { cancellation: Cancellation::Soft, resort: true },
            SicOptions { cancellation: Cancellation::Hard, resort: false },
        ] {
            let out = peel_detect(&g, &h, &y, &p, f64::INFINITY, &mut rng, options, &mut ()).unwrap();
            for k in 0..4 {
                assert!((out.decisions[k].symbol - x[k]).norm() < 1e-12);
            }
            assert!(out.residual.iter().all(|v| v.norm() < 1e-10));
        }
    }

    #[test]
    fn multiuser_branch_orders_by_post_snr() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // user 1 much stronger than user 0 on the only subarray
        let h = CMatrix::from_fn(6, 2, |_, k| complex_gaussian(&mut rng) * if k == 1 { 10.0 } else { 1.0 });
        let p = SubarrayPartition::new(6, 1, SubarrayLayout::Contiguous).unwrap();
        let g = build_graph(&h, &p, 0.9, &mut ()).unwrap();
        let y = h.mul_vec(&[C64::new(1.0, 0.0); 2], &mut ());
        let mut ops = MulCount::default();
        let out = peel_detect(&g, &h, &y, &p, 1.0, &mut rng, SicOptions::default(), &mut ops).unwrap();
        assert_eq!(out.trace.events[0].order, vec![1, 0]);
        assert!(ops.get() > 0);
    }
}
