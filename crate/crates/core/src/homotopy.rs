//! Exact tracing of the piecewise-affine path `eta -> x^eta`.
//!
//! On an interval where the working set `W` stays fixed, `x^eta` is the
//! projection of `-eta c / 2` onto the affine hull of `W`, so it moves along
//! `p = proj_{null(W)}(-c / 2)` and every multiplier is affine in `eta`. A
//! segment ends when an inactive inequality becomes tight (blocking) or a
//! working multiplier reaches zero (dropping). The path is stationary once
//! `p = 0` and no multiplier decreases.
//!
//! Degenerate vertices can produce zero-length pivots and consecutive pieces
//! with the same direction; these are merged so the reported breakpoints are
//! exactly the kinks of the path.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::fmt_sig;
use crate::linalg::{self, dot, norm, norm_inf};
use crate::projection::{project, QlpInstance, WorkingSet};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Event {
    /// Inactive inequality rows that become tight.
    BlockingConstraint(Vec<usize>),
    /// Working row whose multiplier reaches zero.
    DroppingMultiplier(Vec<usize>),
    /// Direction is zero and no multiplier decreases: `x^eta` is constant from here on.
    Stationary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Breakpoint {
    pub eta: f64,
    pub event: Event,
}

/// Tracer state at one point of the path.
pub struct PathState<'a> {
    inst: &'a QlpInstance,
    ws: WorkingSet<'a>,
    eta: f64,
    x: Vec<f64>,
    mult: Vec<f64>,
    dir: Vec<f64>,
    dmult: Vec<f64>,
}

impl<'a> PathState<'a> {
    /// State at `eta = 0`: `x^0` is the projection of the origin.
    pub fn start(inst: &'a QlpInstance) -> Result<Self> {
        let poly = &inst.polytope;
        let x0 = project(poly, &vec![0.0; poly.dim()])?;
        let mut ws = WorkingSet::new(poly);
        for &i in &x0.working_set {
            ws.add(i);
        }
        let mut st = Self {
            inst,
            ws,
            eta: 0.0,
            x: x0.x,
            mult: Vec::new(),
            dir: Vec::new(),
            dmult: Vec::new(),
        };
        st.refresh()?;
        Ok(st)
    }

    fn refresh(&mut self) -> Result<()> {
        let w = linalg::scale(&self.inst.c, -0.5);
        let z = linalg::scale(&w, self.eta);
        let at = self.ws.solve(&z, true)?;
        let mut along = self.ws.solve(&w, false)?;
        let stat = self.inst.polytope.tol().stationarity;
        if norm(&along.x) <= stat * (1.0 + norm(&self.inst.c)) {
            along.x.iter_mut().for_each(|v| *v = 0.0);
        }
        self.x = at.x;
        self.mult = at.ineq_mult;
        self.dir = along.x;
        self.dmult = along.ineq_mult;
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// `dx/deta` on the current segment.
    pub fn direction(&self) -> &[f64] {
        &self.dir
    }

    pub fn working_set(&self) -> Vec<usize> {
        self.ws.rows()
    }

    /// The next event along the current segment. Ties within a relative
    /// `1e-11` are reported together for blocking rows; dropping reports the
    /// smallest row index only.
    pub fn next_breakpoint(&mut self) -> Result<Breakpoint> {
        let poly = &self.inst.polytope;
        let p_inf = norm_inf(&self.dir);
        let dm_tol = 1e-12 * (1.0 + norm_inf(&self.inst.c));

        let mut blocks: Vec<(f64, usize)> = Vec::new();
        if p_inf > 0.0 {
            for i in 0..poly.n_ineq() {
                if self.ws.contains(i) {
                    continue;
                }
                let g = poly.ineq_row(i);
                let gp = dot(g, &self.dir);
                if gp > 1e-12 * norm_inf(g) * p_inf {
                    blocks.push((poly.slack(i, &self.x).max(0.0) / gp, i));
                }
            }
        }
        let mut drops: Vec<(f64, usize)> = self
            .ws
            .rows()
            .into_iter()
            .filter(|&i| self.dmult[i] < -dm_tol)
            .map(|i| (self.mult[i].max(0.0) / -self.dmult[i], i))
            .collect();
        blocks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        drops.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        loop {
            let t_block = blocks.first().map(|b| b.0).unwrap_or(f64::INFINITY);
            let t_drop = drops.first().map(|d| d.0).unwrap_or(f64::INFINITY);
            let t = t_block.min(t_drop);
            if !t.is_finite() {
                if p_inf > 0.0 {
                    return Err(Error::UnboundedSet);
                }
                return Ok(Breakpoint {
                    eta: self.eta,
                    event: Event::Stationary,
                });
            }
            let tie = 1e-11 * (1.0 + self.eta + t);
            if t_block <= t + tie {
                let tied: Vec<usize> = blocks
                    .iter()
                    .take_while(|b| b.0 <= t + tie)
                    .map(|b| b.1)
                    .collect();
                let mut usable = Vec::new();
                for &i in &tied {
                    if self.ws.independent(i)? {
                        usable.push(i);
                    }
                }
                if usable.is_empty() {
                    // roundoff on rows in the span of W; they cannot block
                    blocks.retain(|b| !tied.contains(&b.1));
                    continue;
                }
                usable.sort_unstable();
                return Ok(Breakpoint {
                    eta: self.eta + t,
                    event: Event::BlockingConstraint(usable),
                });
            }
            return Ok(Breakpoint {
                eta: self.eta + t,
                event: Event::DroppingMultiplier(vec![drops[0].1]),
            });
        }
    }

    /// Moves to `bp` and updates the working set. Blocking rows are added in
    /// index order, skipping any that became dependent on rows added before them.
    pub fn advance(&mut self, bp: &Breakpoint) -> Result<()> {
        self.eta = bp.eta;
        match &bp.event {
            Event::BlockingConstraint(rows) => {
                for &i in rows {
                    self.ws.try_add(i)?;
                }
            }
            Event::DroppingMultiplier(rows) => {
                for &i in rows {
                    self.ws.remove(i);
                }
            }
            Event::Stationary => {}
        }
        self.refresh()
    }
}

/// `dx/deta` for the face held by `active_set` (inequality rows): the
/// projection of `-c / 2` onto the null space of the equality rows and
/// `active_set`. Rows dependent on earlier ones are ignored.
pub fn direction(inst: &QlpInstance, active_set: &[usize]) -> Result<Vec<f64>> {
    let mut ws = WorkingSet::new(&inst.polytope);
    for &i in active_set {
        if i >= inst.polytope.n_ineq() {
            return Err(Error::InvalidInput(format!("row {i} out of range")));
        }
        ws.try_add(i)?;
    }
    Ok(ws.solve(&linalg::scale(&inst.c, -0.5), false)?.x)
}

/// The full path from `eta = 0` to stationarity.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionPath {
    /// `0 = eta_0 < eta_1 < ... < eta_n = eta*`
    pub breakpoints: Vec<f64>,
    /// `x^{eta_i}` for each breakpoint.
    pub endpoints: Vec<Vec<f64>>,
    /// Working set (inequality rows) on `[eta_i, eta_{i+1}]`, one per segment.
    pub segment_active_sets: Vec<Vec<usize>>,
    pub eta_star: f64,
    pub x_star: Vec<f64>,
    pub x_zero: Vec<f64>,
    /// Events processed before merging, zero-length pivots included.
    pub raw_events: usize,
}

#[derive(Serialize)]
struct PathJson<'a> {
    breakpoints: &'a [f64],
    endpoints: &'a [Vec<f64>],
    eta_star: f64,
}

struct Piece {
    eta: f64,
    x: Vec<f64>,
    dir: Vec<f64>,
    working: Vec<usize>,
}

impl SolutionPath {
    /// Number of segments `n`.
    pub fn n_segments(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Index of the segment containing `eta`; `n` for `eta >= eta*`.
    pub fn segment_index(&self, eta: f64) -> usize {
        let n = self.n_segments();
        if eta >= self.eta_star {
            return n;
        }
        let k = self.breakpoints.partition_point(|&b| b <= eta);
        k.saturating_sub(1).min(n.saturating_sub(1))
    }

    /// `x^eta` by interpolation between breakpoints.
    pub fn eval(&self, eta: f64) -> Vec<f64> {
        let i = self.segment_index(eta);
        if i >= self.n_segments() {
            return self.x_star.clone();
        }
        let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let t = ((eta - a) / (b - a)).clamp(0.0, 1.0);
        linalg::lerp(&self.endpoints[i], &self.endpoints[i + 1], t)
    }

    /// `dx/deta` on segment `i`.
    pub fn segment_direction(&self, i: usize) -> Vec<f64> {
        let len = self.breakpoints[i + 1] - self.breakpoints[i];
        linalg::scale(
            &linalg::sub(&self.endpoints[i + 1], &self.endpoints[i]),
            1.0 / len,
        )
    }

    /// `(eta_{n-1}, x^{eta_{n-1}})`, the start of the last segment.
    pub fn last_segment_start(&self) -> Option<(f64, &[f64])> {
        let n = self.n_segments();
        (n > 0).then(|| (self.breakpoints[n - 1], self.endpoints[n - 1].as_slice()))
    }

    /// `{"breakpoints": [...], "endpoints": [[...]], "eta_star": v}`
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(PathJson {
            breakpoints: &self.breakpoints,
            endpoints: &self.endpoints,
            eta_star: self.eta_star,
        })
        .expect("path serializes")
    }

    /// One row per breakpoint: `i,eta,x0,...,x{d-1}`.
    pub fn to_csv(&self) -> String {
        let d = self.x_star.len();
        let mut out = String::from("i,eta");
        for j in 0..d {
            out.push_str(&format!(",x{j}"));
        }
        out.push('\n');
        for (i, (eta, x)) in self.breakpoints.iter().zip(&self.endpoints).enumerate() {
            out.push_str(&format!("{i},{}", fmt_sig(*eta, 12)));
            for v in x {
                out.push(',');
                out.push_str(&fmt_sig(*v, 12));
            }
            out.push('\n');
        }
        out
    }
}

fn same_direction(a: &[f64], b: &[f64]) -> bool {
    linalg::dist_inf(a, b) <= 1e-9 * (1.0 + norm_inf(a).max(norm_inf(b)))
}

fn merge(pieces: Vec<Piece>, merge_tol: f64) -> Vec<Piece> {
    let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
    for piece in pieces {
        if let Some(last) = out.last_mut() {
            if piece.eta - last.eta <= merge_tol * last.eta.max(1.0) {
                // zero-length piece: the later pivot describes the segment
                last.dir = piece.dir;
                last.working = piece.working;
                let len = out.len();
                if len >= 2 && same_direction(&out[len - 2].dir, &out[len - 1].dir) {
                    out.pop();
                }
                continue;
            }
            if same_direction(&last.dir, &piece.dir) {
                continue;
            }
        }
        out.push(piece);
    }
    out
}

/// Traces `eta -> x^eta` from `eta = 0` until it becomes stationary.
///
/// Fails with [`Error::MaxSegmentsExceeded`] after `10 (m + k)` events,
/// where `m` and `k` count equality and inequality rows.
pub fn trace_path(inst: &QlpInstance) -> Result<SolutionPath> {
    let poly = &inst.polytope;
    let cap = 10 * (poly.n_eq() + poly.n_ineq()).max(1);
    let mut st = PathState::start(inst)?;
    let x_zero = st.x.clone();
    let mut pieces = Vec::new();
    loop {
        let bp = st.next_breakpoint()?;
        pieces.push(Piece {
            eta: st.eta,
            x: st.x.clone(),
            dir: st.dir.clone(),
            working: st.ws.rows(),
        });
        if bp.event == Event::Stationary {
            break;
        }
        if pieces.len() > cap {
            return Err(Error::MaxSegmentsExceeded(cap));
        }
        st.advance(&bp)?;
    }
    let raw_events = pieces.len() - 1;
    let merged = merge(pieces, poly.tol().breakpoint_merge);
    let n = merged.len() - 1;
    let breakpoints: Vec<f64> = merged.iter().map(|p| p.eta).collect();
    let mut endpoints: Vec<Vec<f64>> = merged.iter().map(|p| p.x.clone()).collect();
    endpoints[0] = x_zero.clone();
    let segment_active_sets = merged[..n].iter().map(|p| p.working.clone()).collect();
    let x_star = endpoints[n].clone();
    Ok(SolutionPath {
        eta_star: breakpoints[n],
        breakpoints,
        endpoints,
        segment_active_sets,
        x_star,
        x_zero,
        raw_events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{Polytope, PolytopeSpec};
    use crate::projection::solve_qlp;

    fn interval_inst() -> QlpInstance {
        QlpInstance::new(
            Polytope::new(PolytopeSpec::unit_interval()).unwrap(),
            vec![-1.0],
        )
        .unwrap()
    }

    #[test]
    fn interval_path() {
        let path = trace_path(&interval_inst()).unwrap();
        assert_eq!(path.breakpoints.len(), 2);
        assert_eq!(path.breakpoints[0], 0.0);
        assert!((path.eta_star - 2.0).abs() < 1e-14);
        assert_eq!(path.x_zero, vec![0.0]);
        assert!((path.x_star[0] - 1.0).abs() < 1e-14);
        assert!((path.eval(1.0)[0] - 0.5).abs() < 1e-14);
        assert_eq!(path.eval(7.0), vec![1.0]);
        assert_eq!(path.segment_index(0.3), 0);
        assert_eq!(path.segment_index(2.5), 1);
    }

    #[test]
    fn interval_events() {
        let inst = interval_inst();
        let mut st = PathState::start(&inst).unwrap();
        assert!((st.direction()[0] - 0.5).abs() < 1e-15);
        let bp = st.next_breakpoint().unwrap();
        assert!((bp.eta - 2.0).abs() < 1e-14);
        assert_eq!(bp.event, Event::BlockingConstraint(vec![1]));
        st.advance(&bp).unwrap();
        assert_eq!(st.direction(), &[0.0]);
        assert_eq!(st.next_breakpoint().unwrap().event, Event::Stationary);
    }

    #[test]
    fn pinned_vertex_has_zero_direction() {
        let inst = interval_inst();
        assert_eq!(direction(&inst, &[1]).unwrap(), vec![0.0]);
        assert_eq!(direction(&inst, &[]).unwrap(), vec![0.5]);
    }

    #[test]
    fn birkhoff_two_direction() {
        let n = 2;
        let poly = Polytope::new(PolytopeSpec::birkhoff(n)).unwrap();
        let c = vec![-0.5, 0.0, 0.0, -0.5];
        let inst = QlpInstance::new(poly, c).unwrap();
        let p = direction(&inst, &[]).unwrap();
        let expect = [0.125, -0.125, -0.125, 0.125];
        assert!(linalg::dist_inf(&p, &expect) < 1e-15);
    }

    #[test]
    fn zero_cost_is_stationary_at_origin() {
        let inst = QlpInstance::new(
            Polytope::new(PolytopeSpec::hypercube(2)).unwrap(),
            vec![0.0; 2],
        )
        .unwrap();
        let path = trace_path(&inst).unwrap();
        assert_eq!(path.breakpoints, vec![0.0]);
        assert_eq!(path.eta_star, 0.0);
        assert_eq!(path.n_segments(), 0);
    }

    #[test]
    fn square_path_midpoints_agree_with_solver() {
        let spec = PolytopeSpec::hypercube(2).inequality(vec![1.0, 2.0], 2.2);
        let inst = QlpInstance::new(Polytope::new(spec).unwrap(), vec![-1.0, -0.4]).unwrap();
        let path = trace_path(&inst).unwrap();
        assert!(path.n_segments() >= 2);
        for w in path.breakpoints.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let x = solve_qlp(&inst, mid).unwrap().x;
            assert!(linalg::dist_inf(&x, &path.eval(mid)) < 1e-10);
        }
        let x = solve_qlp(&inst, 2.0 * path.eta_star).unwrap().x;
        assert!(linalg::dist_inf(&x, &path.x_star) < 1e-10);
    }

    #[test]
    fn csv_and_json_shapes() {
        let path = trace_path(&interval_inst()).unwrap();
        let csv = path.to_csv();
        assert_eq!(csv, "i,eta,x0\n0,0,0\n1,2,1\n");
        let json = path.to_json();
        assert_eq!(json["eta_star"], 2.0);
        assert_eq!(json.as_object().unwrap().len(), 3);
    }
}
