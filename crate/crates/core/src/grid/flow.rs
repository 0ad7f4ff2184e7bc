use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{GridError, Network};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IslandSummary {
    /// Bus ids, ascending.
    pub buses: Vec<u32>,
    pub load_mw: f64,
    /// Generation actually dispatched after rebalancing.
    pub generation_mw: f64,
    pub served_mw: f64,
    /// The reduced susceptance matrix could not be factored; the island is
    /// treated as fully shed.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSolution {
    /// Signed MW flow per line position, `from -> to` positive; zero on outaged lines.
    pub flows_mw: Vec<f64>,
    pub islands: Vec<IslandSummary>,
    pub served_mw: f64,
    pub shed_mw: f64,
    /// Net injection (dispatched generation minus served load) per bus position.
    pub injections_mw: Vec<f64>,
}

impl FlowSolution {
    pub fn has_degenerate_island(&self) -> bool {
        self.islands.iter().any(|i| i.degenerate)
    }
}

impl Network {
    /// DC power flow with the given line ids out of service.
    pub fn dc_power_flow(&self, outaged_lines: &BTreeSet<u32>) -> Result<FlowSolution, GridError> {
        let mut mask = vec![false; self.lines().len()];
        for &id in outaged_lines {
            let e = self.line_position(id).ok_or(GridError::UnknownLine(id))?;
            mask[e] = true;
        }
        Ok(self.dc_flow_masked(&mask))
    }

    /// DC power flow with `outaged[e]` marking line positions out of service.
    ///
    /// Each island is balanced on its own: surplus generation is scaled down
    /// to the island load, a deficit is covered by shedding every load by the
    /// same fraction. Islands lacking either load or generation serve nothing.
    pub fn dc_flow_masked(&self, outaged: &[bool]) -> FlowSolution {
        assert_eq!(outaged.len(), self.lines().len());
        let buses = self.buses();
        let base = self.base_mva();
        let uf = self.islands(outaged);

        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut group_of_root = std::collections::HashMap::new();
        for b in 0..buses.len() {
            let root = uf.find(b);
            let g = *group_of_root.entry(root).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(b);
        }

        let mut flows = vec![0.0; self.lines().len()];
        let mut injections = vec![0.0; buses.len()];
        let mut islands = Vec::with_capacity(groups.len());
        let mut served_total = 0.0;

        // Lines grouped by island, found once.
        let mut island_lines: Vec<Vec<usize>> = vec![Vec::new(); groups.len()];
        for e in 0..self.lines().len() {
            if !outaged[e] {
                let (a, _) = self.line_ends(e);
                island_lines[group_of_root[&uf.find(a)]].push(e);
            }
        }

        for (gi, members) in groups.iter().enumerate() {
            let load: f64 = members.iter().map(|&b| buses[b].load_mw).sum();
            let gen: f64 = members.iter().map(|&b| buses[b].gen_mw).sum();
            let mut ids: Vec<u32> = members.iter().map(|&b| buses[b].id).collect();
            ids.sort_unstable();

            let (gen_scale, load_scale) = if load <= 0.0 || gen <= 0.0 {
                (0.0, 0.0)
            } else if gen >= load {
                (load / gen, 1.0)
            } else {
                (1.0, gen / load)
            };
            for &b in members {
                injections[b] = buses[b].gen_mw * gen_scale - buses[b].load_mw * load_scale;
            }
            let served = load * load_scale;
            let mut summary = IslandSummary {
                buses: ids,
                load_mw: load,
                generation_mw: gen * gen_scale,
                served_mw: served,
                degenerate: false,
            };

            if members.len() > 1 && served > 0.0 && !self.solve_island(members, &island_lines[gi], &injections, base, &mut flows) {
                summary.degenerate = true;
                summary.served_mw = 0.0;
                summary.generation_mw = 0.0;
                for &b in members {
                    injections[b] = 0.0;
                }
                for &e in &island_lines[gi] {
                    flows[e] = 0.0;
                }
            }
            served_total += summary.served_mw;
            islands.push(summary);
        }

        let total_load = self.total_load_mw();
        FlowSolution {
            flows_mw: flows,
            islands,
            served_mw: served_total,
            shed_mw: (total_load - served_total).max(0.0),
            injections_mw: injections,
        }
    }

    /// Solves `B' theta = P` on one island. Returns false when the reduced
    /// matrix cannot be factored.
    fn solve_island(
        &self,
        members: &[usize],
        lines: &[usize],
        injections: &[f64],
        base: f64,
        flows: &mut [f64],
    ) -> bool {
        let buses = self.buses();
        // Reference: lowest bus id carrying generation.
        let slack = members
            .iter()
            .copied()
            .filter(|&b| buses[b].gen_mw > 0.0)
            .min_by_key(|&b| buses[b].id)
            .expect("island with served load has generation");

        let mut local = vec![usize::MAX; buses.len()];
        let mut n = 0;
        for &b in members {
            if b != slack {
                local[b] = n;
                n += 1;
            }
        }
        let mut bmat = DMatrix::<f64>::zeros(n, n);
        for &e in lines {
            let (a, b) = self.line_ends(e);
            let y = 1.0 / self.lines()[e].reactance;
            let (la, lb) = (local[a], local[b]);
            if la != usize::MAX {
                bmat[(la, la)] += y;
            }
            if lb != usize::MAX {
                bmat[(lb, lb)] += y;
            }
            if la != usize::MAX && lb != usize::MAX {
                bmat[(la, lb)] -= y;
                bmat[(lb, la)] -= y;
            }
        }
        let mut rhs = DVector::<f64>::zeros(n);
        for &b in members {
            if local[b] != usize::MAX {
                rhs[local[b]] = injections[b] / base;
            }
        }
        let Some(chol) = bmat.cholesky() else {
            return false;
        };
        let theta = chol.solve(&rhs);
        let angle = |b: usize| if local[b] == usize::MAX { 0.0 } else { theta[local[b]] };
        for &e in lines {
            let (a, b) = self.line_ends(e);
            flows[e] = (angle(a) - angle(b)) / self.lines()[e].reactance * base;
        }
        theta.iter().all(|t| t.is_finite())
    }
}
