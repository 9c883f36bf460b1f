//! Posterior post-processing: co-clustering probabilities, VI-loss point
//! estimation by greedy search with restarts, LPML, WAIC, and posterior
//! lagged-ARI summaries.  Everything here is a pure fold over the archive
//! and invariant to cluster relabeling of the draws.

use crate::error::{Error, Result};
use crate::mcmc::DrawsArchive;
use crate::numeric::logsumexp;
use crate::partition::{adjusted_rand_index, Partition};
use crate::seed::{domain, stream_rng};
use crate::temporal::{lagged_ari_matrix, LaggedAri, PartitionSequence};
use rand::Rng;

/// Per-slice posterior pairwise co-clustering probabilities.
#[derive(Debug, Clone)]
pub struct CoClusterMatrix {
    pub t_len: usize,
    pub m: usize,
    /// One m x m row-major matrix per slice.
    pub per_t: Vec<Vec<f64>>,
}

impl CoClusterMatrix {
    pub fn at(&self, t: usize, i: usize, j: usize) -> f64 {
        self.per_t[t][i * self.m + j]
    }
}

pub fn coclustering(archive: &DrawsArchive) -> Result<CoClusterMatrix> {
    if archive.draws.is_empty() {
        return Err(Error::EmptyInput("draws archive"));
    }
    let (t_len, m) = (archive.t_len, archive.m);
    let mut per_t = vec![vec![0.0f64; m * m]; t_len];
    for d in &archive.draws {
        for t in 0..t_len {
            let labels = &d.labels[t];
            let acc = &mut per_t[t];
            for i in 0..m {
                acc[i * m + i] += 1.0;
                for j in i + 1..m {
                    if labels[i] == labels[j] {
                        acc[i * m + j] += 1.0;
                        acc[j * m + i] += 1.0;
                    }
                }
            }
        }
    }
    let n = archive.draws.len() as f64;
    for acc in &mut per_t {
        acc.iter_mut().for_each(|x| *x /= n);
    }
    Ok(CoClusterMatrix { t_len, m, per_t })
}

/// Mean ARI of each slice's draws against a reference partition.
pub fn expected_ari_vs(archive: &DrawsArchive, reference: &Partition) -> Result<Vec<f64>> {
    if archive.draws.is_empty() {
        return Err(Error::EmptyInput("draws archive"));
    }
    let mut out = vec![0.0; archive.t_len];
    for d in &archive.draws {
        for t in 0..archive.t_len {
            let p = Partition::from_canonical_labels(d.labels[t].clone());
            out[t] += adjusted_rand_index(&p, reference)?;
        }
    }
    let n = archive.draws.len() as f64;
    out.iter_mut().for_each(|x| *x /= n);
    Ok(out)
}

/// Search settings for the VI-loss point estimate.
#[derive(Debug, Clone)]
pub struct PointEstimateConfig {
    pub restarts: usize,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for PointEstimateConfig {
    fn default() -> Self {
        PointEstimateConfig {
            restarts: 16,
            max_sweeps: 50,
            seed: 0,
        }
    }
}

/// Minimizes the posterior expected VI loss over slice `t`'s draws by greedy
/// sequential allocation with restarts and single-unit sweep refinement.
/// Deterministic given the seed; ties break toward the lexicographically
/// smallest canonical labels.
pub fn point_estimate_vi(
    archive: &DrawsArchive,
    t: usize,
    cfg: &PointEstimateConfig,
) -> Result<Partition> {
    if archive.draws.is_empty() {
        return Err(Error::EmptyInput("draws archive"));
    }
    if t >= archive.t_len {
        return Err(Error::DimensionMismatch {
            what: "slice index",
            expected: archive.t_len,
            got: t,
        });
    }
    let draws: Vec<&[u32]> = archive.draws.iter().map(|d| d.labels[t].as_slice()).collect();
    point_estimate_vi_for_draws(&draws, cfg)
}

/// The same search over a bare collection of canonical label draws.
pub fn point_estimate_vi_for_draws(
    draws: &[&[u32]],
    cfg: &PointEstimateConfig,
) -> Result<Partition> {
    if draws.is_empty() {
        return Err(Error::EmptyInput("label draws"));
    }
    let mut search = VlossSearch::new(draws)?;
    let mut best: Option<(f64, Vec<u32>)> = None;
    let consider = |value: f64, labels: Vec<u32>, best: &mut Option<(f64, Vec<u32>)>| {
        let better = match best {
            None => true,
            Some((bv, bl)) => {
                value < *bv - 1e-12 || ((value - *bv).abs() <= 1e-12 && labels < *bl)
            }
        };
        if better {
            *best = Some((value, labels));
        }
    };
    for r in 0..cfg.restarts.max(1) {
        let mut rng = stream_rng(cfg.seed, domain::SUMMARY + r as u64);
        let labels = search.run_restart(&mut rng, cfg.max_sweeps);
        consider(search.objective(), labels, &mut best);
    }
    // Sweep-refine from the most frequent draws as well; the minimizer is
    // often at or near a well-supported draw.
    for labels in search.top_draw_inits(cfg.restarts.max(1)) {
        let refined = search.run_from_labels(&labels, cfg.max_sweeps);
        consider(search.objective(), refined, &mut best);
    }
    let (_, labels) = best.expect("at least one restart");
    Ok(Partition::from_canonical_labels(labels))
}

/// Expected VI loss of a candidate against the draws (for diagnostics and
/// oracle comparisons).
pub fn expected_vi_loss(candidate: &Partition, draws: &[&[u32]]) -> Result<f64> {
    let mut total = 0.0;
    for &d in draws {
        let q = Partition::from_canonical_labels(d.to_vec());
        total += crate::partition::variation_of_information(candidate, &q)?;
    }
    Ok(total / draws.len() as f64)
}

/// Greedy/sweep search state: weighted unique draws with incremental
/// candidate-side contingency tables.
struct VlossSearch {
    m: usize,
    total_weight: f64,
    draw_labels: Vec<Vec<u32>>,
    draw_weight: Vec<f64>,
    draw_offset: Vec<usize>,
    cells_len: usize,
    s_cols_w: f64,
    xlx: Vec<f64>,
    // candidate state
    assign: Vec<usize>,
    row_sums: Vec<u32>,
    cells: Vec<Vec<u32>>,
    s_rows: f64,
    s_cells_w: f64,
}

impl VlossSearch {
    fn new(draws: &[&[u32]]) -> Result<Self> {
        let m = draws[0].len();
        let mut draw_labels: Vec<Vec<u32>> = Vec::new();
        let mut draw_weight: Vec<f64> = Vec::new();
        for &d in draws {
            if d.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "draw labels",
                    expected: m,
                    got: d.len(),
                });
            }
            match draw_labels.iter().position(|x| x.as_slice() == d) {
                Some(idx) => draw_weight[idx] += 1.0,
                None => {
                    draw_labels.push(d.to_vec());
                    draw_weight.push(1.0);
                }
            }
        }
        let mut xlx = Vec::with_capacity(m + 2);
        for n in 0..=(m + 1) {
            xlx.push(if n == 0 {
                0.0
            } else {
                let x = n as f64;
                x * x.log2()
            });
        }
        let mut draw_offset = Vec::with_capacity(draw_labels.len());
        let mut cells_len = 0usize;
        let mut s_cols_w = 0.0;
        for (d, labels) in draw_labels.iter().enumerate() {
            draw_offset.push(cells_len);
            let k = *labels.iter().max().unwrap() as usize;
            cells_len += k;
            let mut sizes = vec![0u32; k];
            for &l in labels {
                sizes[l as usize - 1] += 1;
            }
            s_cols_w += draw_weight[d] * sizes.iter().map(|&n| xlx[n as usize]).sum::<f64>();
        }
        Ok(VlossSearch {
            m,
            total_weight: draws.len() as f64,
            draw_labels,
            draw_weight,
            draw_offset,
            cells_len,
            s_cols_w,
            xlx,
            assign: vec![usize::MAX; m],
            row_sums: Vec::new(),
            cells: Vec::new(),
            s_rows: 0.0,
            s_cells_w: 0.0,
        })
    }

    fn reset(&mut self) {
        self.assign.iter_mut().for_each(|a| *a = usize::MAX);
        self.row_sums.clear();
        self.cells.clear();
        self.s_rows = 0.0;
        self.s_cells_w = 0.0;
    }

    /// Change in (weight * s_rows - 2 * s_cells_w) if unit `i` joined
    /// cluster `c`; `c == row_sums.len()` denotes a fresh cluster.
    fn add_score(&self, i: usize, c: usize) -> f64 {
        if c == self.row_sums.len() {
            // New singleton: row of one and cells of one contribute nothing.
            return 0.0;
        }
        let dr = self.xlx[self.row_sums[c] as usize + 1] - self.xlx[self.row_sums[c] as usize];
        let mut dc = 0.0;
        for d in 0..self.draw_labels.len() {
            let l = self.draw_labels[d][i] as usize - 1;
            let cell = self.cells[c][self.draw_offset[d] + l] as usize;
            dc += self.draw_weight[d] * (self.xlx[cell + 1] - self.xlx[cell]);
        }
        self.total_weight * dr - 2.0 * dc
    }

    fn add(&mut self, i: usize, c: usize) {
        let c = if c == self.row_sums.len() {
            self.row_sums.push(0);
            self.cells.push(vec![0u32; self.cells_len]);
            self.row_sums.len() - 1
        } else {
            c
        };
        self.s_rows -= self.xlx[self.row_sums[c] as usize];
        self.row_sums[c] += 1;
        self.s_rows += self.xlx[self.row_sums[c] as usize];
        for d in 0..self.draw_labels.len() {
            let l = self.draw_labels[d][i] as usize - 1;
            let cell = &mut self.cells[c][self.draw_offset[d] + l];
            self.s_cells_w -= self.draw_weight[d] * self.xlx[*cell as usize];
            *cell += 1;
            self.s_cells_w += self.draw_weight[d] * self.xlx[*cell as usize];
        }
        self.assign[i] = c;
    }

    fn remove(&mut self, i: usize) {
        let c = self.assign[i];
        self.s_rows -= self.xlx[self.row_sums[c] as usize];
        self.row_sums[c] -= 1;
        self.s_rows += self.xlx[self.row_sums[c] as usize];
        for d in 0..self.draw_labels.len() {
            let l = self.draw_labels[d][i] as usize - 1;
            let cell = &mut self.cells[c][self.draw_offset[d] + l];
            self.s_cells_w -= self.draw_weight[d] * self.xlx[*cell as usize];
            *cell -= 1;
            self.s_cells_w += self.draw_weight[d] * self.xlx[*cell as usize];
        }
        self.assign[i] = usize::MAX;
    }

    /// Mean VI loss of the fully assigned candidate.
    fn objective(&self) -> f64 {
        (self.total_weight * self.s_rows + self.s_cols_w - 2.0 * self.s_cells_w)
            / (self.m as f64 * self.total_weight)
    }

    /// Best target for unit `i`, ties resolved toward existing clusters in
    /// index order (a fresh cluster only wins strictly).
    fn best_cluster(&self, i: usize) -> usize {
        let mut best_c = usize::MAX;
        let mut best_score = f64::INFINITY;
        for c in 0..self.row_sums.len() {
            if self.row_sums[c] == 0 {
                continue;
            }
            let s = self.add_score(i, c);
            if s < best_score - 1e-12 {
                best_score = s;
                best_c = c;
            }
        }
        let fresh = self.row_sums.len();
        if self.add_score(i, fresh) < best_score - 1e-12 || best_c == usize::MAX {
            fresh
        } else {
            best_c
        }
    }

    /// One pass of pairwise cluster merges; applies every strictly
    /// loss-reducing merge greedily.
    fn try_merges(&mut self) -> bool {
        let mut merged_any = false;
        loop {
            let active: Vec<usize> = (0..self.row_sums.len())
                .filter(|&c| self.row_sums[c] > 0)
                .collect();
            let mut best: Option<(f64, usize, usize)> = None;
            for (ai, &a) in active.iter().enumerate() {
                for &b in &active[ai + 1..] {
                    let dr = self.xlx[(self.row_sums[a] + self.row_sums[b]) as usize]
                        - self.xlx[self.row_sums[a] as usize]
                        - self.xlx[self.row_sums[b] as usize];
                    let mut dc = 0.0;
                    for d in 0..self.draw_labels.len() {
                        let off = self.draw_offset[d];
                        let end = if d + 1 < self.draw_offset.len() {
                            self.draw_offset[d + 1]
                        } else {
                            self.cells_len
                        };
                        for col in off..end {
                            let ca = self.cells[a][col];
                            let cb = self.cells[b][col];
                            if cb == 0 && ca == 0 {
                                continue;
                            }
                            dc += self.draw_weight[d]
                                * (self.xlx[(ca + cb) as usize]
                                    - self.xlx[ca as usize]
                                    - self.xlx[cb as usize]);
                        }
                    }
                    let delta = self.total_weight * dr - 2.0 * dc;
                    if delta < -1e-12 && best.map_or(true, |(bd, _, _)| delta < bd) {
                        best = Some((delta, a, b));
                    }
                }
            }
            match best {
                Some((_, a, b)) => {
                    self.merge_clusters(a, b);
                    merged_any = true;
                }
                None => return merged_any,
            }
        }
    }

    fn merge_clusters(&mut self, a: usize, b: usize) {
        self.s_rows -= self.xlx[self.row_sums[a] as usize] + self.xlx[self.row_sums[b] as usize];
        self.row_sums[a] += self.row_sums[b];
        self.row_sums[b] = 0;
        self.s_rows += self.xlx[self.row_sums[a] as usize];
        for d in 0..self.draw_labels.len() {
            let off = self.draw_offset[d];
            let end = if d + 1 < self.draw_offset.len() {
                self.draw_offset[d + 1]
            } else {
                self.cells_len
            };
            for col in off..end {
                let cb = self.cells[b][col];
                if cb == 0 {
                    continue;
                }
                let ca = self.cells[a][col];
                self.s_cells_w -= self.draw_weight[d]
                    * (self.xlx[ca as usize] + self.xlx[cb as usize]);
                self.cells[a][col] = ca + cb;
                self.cells[b][col] = 0;
                self.s_cells_w += self.draw_weight[d] * self.xlx[(ca + cb) as usize];
            }
        }
        for c in self.assign.iter_mut() {
            if *c == b {
                *c = a;
            }
        }
    }

    fn run_restart<R: Rng>(&mut self, rng: &mut R, max_sweeps: usize) -> Vec<u32> {
        self.reset();
        let mut order: Vec<usize> = (0..self.m).collect();
        for j in (1..order.len()).rev() {
            let r = rng.gen_range(0..=j);
            order.swap(j, r);
        }
        for &i in &order {
            let c = self.best_cluster(i);
            self.add(i, c);
        }
        self.refine(max_sweeps)
    }

    /// Up to `n` initial candidates among the unique draws, most frequent
    /// first with lexicographic tie-breaking.
    fn top_draw_inits(&self, n: usize) -> Vec<Vec<u32>> {
        let mut order: Vec<usize> = (0..self.draw_labels.len()).collect();
        order.sort_by(|&a, &b| {
            self.draw_weight[b]
                .partial_cmp(&self.draw_weight[a])
                .unwrap()
                .then_with(|| self.draw_labels[a].cmp(&self.draw_labels[b]))
        });
        order
            .into_iter()
            .take(n)
            .map(|d| self.draw_labels[d].clone())
            .collect()
    }

    fn run_from_labels(&mut self, labels: &[u32], max_sweeps: usize) -> Vec<u32> {
        self.reset();
        for i in 0..self.m {
            let want = labels[i] as usize - 1;
            while self.row_sums.len() < want + 1 {
                self.row_sums.push(0);
                self.cells.push(vec![0u32; self.cells_len]);
            }
            // `add` treats c == len as fresh; existing ids pass through.
            let c = if want == self.row_sums.len() {
                self.row_sums.len()
            } else {
                want
            };
            self.add(i, c);
        }
        self.refine(max_sweeps)
    }

    fn refine(&mut self, max_sweeps: usize) -> Vec<u32> {
        for _ in 0..max_sweeps {
            let mut changed = false;
            for i in 0..self.m {
                let old = self.assign[i];
                self.remove(i);
                let c = self.best_cluster(i);
                self.add(i, c);
                if self.assign[i] != old {
                    changed = true;
                }
            }
            if !changed && !self.try_merges() {
                break;
            }
        }
        // Canonical labels by first appearance.
        let mut rank = vec![u32::MAX; self.row_sums.len()];
        let mut next = 0u32;
        let mut labels = Vec::with_capacity(self.m);
        for &c in &self.assign {
            if rank[c] == u32::MAX {
                rank[c] = next;
                next += 1;
            }
            labels.push(rank[c] + 1);
        }
        labels
    }
}

/// LPML with per-observation conditional predictive ordinates computed in
/// log space; observations whose CPO cannot be evaluated (non-finite
/// likelihood in some draw) are excluded and reported.
#[derive(Debug, Clone)]
pub struct LpmlResult {
    pub lpml: f64,
    /// (t, unit) indices of excluded observations.
    pub flagged: Vec<(usize, usize)>,
}

pub fn lpml(archive: &DrawsArchive) -> Result<LpmlResult> {
    let ll = obs_matrix(archive)?;
    let b = archive.draws.len() as f64;
    let mut total = 0.0;
    let mut flagged = Vec::new();
    for (obs, series) in ll.iter().enumerate() {
        if series.iter().any(|v| !v.is_finite()) {
            flagged.push((obs / archive.m, obs % archive.m));
            continue;
        }
        let neg: Vec<f64> = series.iter().map(|&v| -v).collect();
        total += b.ln() - logsumexp(&neg);
    }
    Ok(LpmlResult {
        lpml: total,
        flagged,
    })
}

/// WAIC (smaller is better): -2 * sum(lppd_obs) + 2 * sum(var_obs), with the
/// variance term from the unbiased sample variance of the per-draw log
/// densities (zero for a single draw).
pub fn waic(archive: &DrawsArchive) -> Result<f64> {
    let ll = obs_matrix(archive)?;
    let b = archive.draws.len();
    let bf = b as f64;
    let mut lppd = 0.0;
    let mut p_waic = 0.0;
    for series in &ll {
        lppd += logsumexp(series) - bf.ln();
        if b > 1 {
            let mean = series.iter().sum::<f64>() / bf;
            let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (bf - 1.0);
            p_waic += var;
        }
    }
    Ok(-2.0 * lppd + 2.0 * p_waic)
}

/// Per-observation series across draws, indexed obs = t * m + i.
fn obs_matrix(archive: &DrawsArchive) -> Result<Vec<Vec<f64>>> {
    if archive.draws.is_empty() {
        return Err(Error::EmptyInput("draws archive"));
    }
    if !archive.has_loglik() {
        return Err(Error::InvalidParameter(
            "archive has no per-observation log likelihoods (prior-only run?)".into(),
        ));
    }
    let n_obs = archive.t_len * archive.m;
    let mut out = vec![Vec::with_capacity(archive.draws.len()); n_obs];
    for d in &archive.draws {
        if d.obs_loglik.len() != n_obs {
            return Err(Error::DimensionMismatch {
                what: "per-draw log likelihoods",
                expected: n_obs,
                got: d.obs_loglik.len(),
            });
        }
        for (obs, &v) in d.obs_loglik.iter().enumerate() {
            out[obs].push(v);
        }
    }
    Ok(out)
}

/// Posterior mean lagged ARI between slices; needs at least two slices.
pub fn posterior_lagged_ari(archive: &DrawsArchive) -> Result<LaggedAri> {
    if archive.t_len < 2 {
        return Err(Error::InvalidParameter(
            "lagged ARI needs at least two time points".into(),
        ));
    }
    if archive.draws.is_empty() {
        return Err(Error::EmptyInput("draws archive"));
    }
    let seqs: Vec<PartitionSequence> = archive
        .draws
        .iter()
        .map(|d| {
            PartitionSequence::new(
                d.labels
                    .iter()
                    .map(|l| Partition::from_canonical_labels(l.clone()))
                    .collect(),
            )
        })
        .collect::<Result<_>>()?;
    lagged_ari_matrix(&seqs, None)
}
