use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::{Atom, DiscreteMeasure, Provenance};
use crate::error::{Error, Result};
use crate::geometry::ChartPoint;

pub type Rational = Ratio<i64>;

const TABLE_V1: &str = include_str!("../../data/gifs_torus_v1.json");

/// Exact rational stored as `[numerator, denominator]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Frac(i64, i64);

impl Frac {
    fn to_ratio(self) -> Result<Rational> {
        if self.1 == 0 {
            return Err(Error::Invalid(format!(
                "zero denominator in {}/{}",
                self.0, self.1
            )));
        }
        Ok(Ratio::new(self.0, self.1))
    }

    fn from_ratio(r: Rational) -> Self {
        Frac(*r.numer(), *r.denom())
    }
}

/// Axis-aligned closed rectangle `[x0, x1] × [y0, y1]` in the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x0: Rational,
    pub x1: Rational,
    pub y0: Rational,
    pub y1: Rational,
}

impl Rect {
    pub fn center(&self) -> (Rational, Rational) {
        let two = Ratio::from_integer(2);
        ((self.x0 + self.x1) / two, (self.y0 + self.y1) / two)
    }

    pub fn corners(&self) -> [(Rational, Rational); 4] {
        [
            (self.x0, self.y0),
            (self.x1, self.y0),
            (self.x0, self.y1),
            (self.x1, self.y1),
        ]
    }

    fn contains_f64(&self, x: f64, y: f64, tol: f64) -> bool {
        x >= to_f64(self.x0) - tol
            && x <= to_f64(self.x1) + tol
            && y >= to_f64(self.y0) - tol
            && y <= to_f64(self.y1) + tol
    }
}

pub(crate) fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Edge `e ∈ E^{src,dst}` carrying the similitude `S_e(x) = ratio·x + translation`,
/// which sends `W_dst` into `W_src`. Vertex ids are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GifsEdge {
    pub id: usize,
    pub src: usize,
    pub dst: usize,
    pub ratio: Rational,
    pub translation: (Rational, Rational),
    /// Index of the torus map `h_m` this edge restricts (1-based), if known.
    pub torus_map: Option<usize>,
    /// Tabulated offset `d` relative to the lower-left corner of `W_dst`, so
    /// that `translation ≡ corner/2 + d (mod 1)`.
    pub corner_offset: Option<(Rational, Rational)>,
}

impl GifsEdge {
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let r = to_f64(self.ratio);
        (
            r * x + to_f64(self.translation.0),
            r * y + to_f64(self.translation.1),
        )
    }

    pub fn apply_exact(&self, p: (Rational, Rational)) -> (Rational, Rational) {
        (
            self.ratio * p.0 + self.translation.0,
            self.ratio * p.1 + self.translation.1,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GifsSpec {
    pub vertices: Vec<Rect>,
    pub edges: Vec<GifsEdge>,
    /// One weight per edge, aligned with `edges`.
    pub probabilities: Vec<Rational>,
}

#[derive(Deserialize, Serialize)]
struct RectFile {
    id: usize,
    x: [Frac; 2],
    y: [Frac; 2],
}

#[derive(Deserialize, Serialize)]
struct TorusMapFile {
    id: usize,
    ratio: Frac,
    translation: [Frac; 2],
}

#[derive(Deserialize, Serialize)]
struct EdgeFile {
    id: usize,
    src: usize,
    dst: usize,
    ratio: Frac,
    translation: [Frac; 2],
    torus_map: Option<usize>,
    corner_offset: Option<[Frac; 2]>,
}

#[derive(Deserialize, Serialize)]
struct TableFile {
    version: u32,
    vertices: Vec<RectFile>,
    torus_maps: Vec<TorusMapFile>,
    edges: Vec<EdgeFile>,
}

/// Outcome of checking `S_e(W_dst) ⊆ W_src` on the four corners.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentCheck {
    pub edge: usize,
    pub contained: bool,
    /// Largest distance by which an image corner leaves `W_src`.
    pub max_excess: f64,
}

impl GifsSpec {
    /// The built-in twelve-rectangle, 48-edge system on the torus with
    /// uniform weights over the out-edges of each vertex.
    pub fn torus_table() -> Self {
        let (vertices, edges, _) = Self::parse_table(TABLE_V1).expect("built-in table is valid");
        let probabilities = uniform_probabilities(vertices.len(), &edges);
        GifsSpec {
            vertices,
            edges,
            probabilities,
        }
    }

    /// The four torus maps `h_m(x) = x/2 + t_m (mod 1)` underlying the table.
    pub fn torus_maps() -> Vec<(Rational, (Rational, Rational))> {
        let (_, _, maps) = Self::parse_table(TABLE_V1).expect("built-in table is valid");
        maps
    }

    #[allow(clippy::type_complexity)]
    fn parse_table(
        text: &str,
    ) -> Result<(
        Vec<Rect>,
        Vec<GifsEdge>,
        Vec<(Rational, (Rational, Rational))>,
    )> {
        let file: TableFile = serde_json::from_str(text)?;
        if file.version != 1 {
            return Err(Error::Invalid(format!(
                "unsupported table version {}",
                file.version
            )));
        }
        let mut vertices = Vec::with_capacity(file.vertices.len());
        for (k, r) in file.vertices.iter().enumerate() {
            if r.id != k + 1 {
                return Err(Error::Invalid(format!(
                    "vertex ids must be 1..n in order, got {}",
                    r.id
                )));
            }
            vertices.push(Rect {
                x0: r.x[0].to_ratio()?,
                x1: r.x[1].to_ratio()?,
                y0: r.y[0].to_ratio()?,
                y1: r.y[1].to_ratio()?,
            });
        }
        let mut edges = Vec::with_capacity(file.edges.len());
        for e in &file.edges {
            edges.push(GifsEdge {
                id: e.id,
                src: e.src,
                dst: e.dst,
                ratio: e.ratio.to_ratio()?,
                translation: (e.translation[0].to_ratio()?, e.translation[1].to_ratio()?),
                torus_map: e.torus_map,
                corner_offset: match e.corner_offset {
                    Some([a, b]) => Some((a.to_ratio()?, b.to_ratio()?)),
                    None => None,
                },
            });
        }
        let mut maps = Vec::new();
        for m in &file.torus_maps {
            maps.push((
                m.ratio.to_ratio()?,
                (m.translation[0].to_ratio()?, m.translation[1].to_ratio()?),
            ));
        }
        Ok((vertices, edges, maps))
    }

    /// Drops the listed edges while keeping the weights of the others, so
    /// the probability rows of affected vertices no longer sum to one.
    pub fn without_edges(&self, ids: &[usize]) -> Self {
        let keep: Vec<bool> = self.edges.iter().map(|e| !ids.contains(&e.id)).collect();
        GifsSpec {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(e, _)| e.clone())
                .collect(),
            probabilities: self
                .probabilities
                .iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(p, _)| *p)
                .collect(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Exact probability row sums, one per vertex.
    pub fn row_sums(&self) -> Vec<Rational> {
        let mut sums = vec![Ratio::from_integer(0); self.vertices.len()];
        for (e, p) in self.edges.iter().zip(&self.probabilities) {
            if (1..=sums.len()).contains(&e.src) {
                sums[e.src - 1] += *p;
            }
        }
        sums
    }

    /// Structural checks plus exact row-stochasticity of the weights.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if n == 0 {
            return Err(Error::Invalid("GIFS needs at least one vertex".into()));
        }
        if self.probabilities.len() != self.edges.len() {
            return Err(Error::Invalid(format!(
                "{} edges but {} probabilities",
                self.edges.len(),
                self.probabilities.len()
            )));
        }
        for e in &self.edges {
            if !(1..=n).contains(&e.src) || !(1..=n).contains(&e.dst) {
                return Err(Error::Invalid(format!(
                    "edge {} joins {}→{}, vertices are 1..{n}",
                    e.id, e.src, e.dst
                )));
            }
            if e.ratio <= Ratio::from_integer(0) || e.ratio >= Ratio::from_integer(1) {
                return Err(Error::Invalid(format!(
                    "edge {} ratio {} is not a contraction",
                    e.id, e.ratio
                )));
            }
        }
        if let Some((e, p)) = self
            .edges
            .iter()
            .zip(&self.probabilities)
            .find(|(_, p)| **p <= Ratio::from_integer(0))
        {
            return Err(Error::Invalid(format!(
                "edge {} has nonpositive probability {p}",
                e.id
            )));
        }
        for (i, s) in self.row_sums().iter().enumerate() {
            if *s != Ratio::from_integer(1) {
                return Err(Error::Invalid(format!(
                    "probabilities leaving vertex {} sum to {s}, expected 1",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Corner test of `S_e(W_dst) ⊆ W_src` with tolerance `tol`.
    pub fn containment(&self, tol: f64) -> Vec<ContainmentCheck> {
        self.edges
            .iter()
            .map(|e| {
                let src = &self.vertices[e.src - 1];
                let dst = &self.vertices[e.dst - 1];
                let mut excess = 0.0f64;
                for (cx, cy) in dst.corners() {
                    let (x, y) = e.apply(to_f64(cx), to_f64(cy));
                    let dx = (to_f64(src.x0) - x).max(x - to_f64(src.x1)).max(0.0);
                    let dy = (to_f64(src.y0) - y).max(y - to_f64(src.y1)).max(0.0);
                    excess = excess.max(dx.max(dy));
                }
                let contained = dst.corners().iter().all(|&(cx, cy)| {
                    let (x, y) = e.apply(to_f64(cx), to_f64(cy));
                    src.contains_f64(x, y, tol)
                });
                ContainmentCheck {
                    edge: e.id,
                    contained,
                    max_excess: excess,
                }
            })
            .collect()
    }

    /// Adjacency lists (0-based) of the underlying directed graph.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            adj[e.src - 1].push(e.dst - 1);
        }
        adj
    }

    pub fn to_json(&self) -> serde_json::Value {
        let edges: Vec<serde_json::Value> = self
            .edges
            .iter()
            .zip(&self.probabilities)
            .map(|(e, p)| {
                serde_json::json!({
                    "id": e.id,
                    "src": e.src,
                    "dst": e.dst,
                    "ratio": Frac::from_ratio(e.ratio),
                    "translation": [Frac::from_ratio(e.translation.0), Frac::from_ratio(e.translation.1)],
                    "probability": Frac::from_ratio(*p),
                })
            })
            .collect();
        serde_json::json!({ "vertices": self.vertices.len(), "edges": edges })
    }
}

/// Weight `1/outdeg(src)` on every edge.
pub fn uniform_probabilities(n: usize, edges: &[GifsEdge]) -> Vec<Rational> {
    let mut outdeg = vec![0i64; n];
    for e in edges {
        if (1..=n).contains(&e.src) {
            outdeg[e.src - 1] += 1;
        }
    }
    edges
        .iter()
        .map(|e| Ratio::new(1, outdeg[e.src - 1].max(1)))
        .collect()
}

/// Per-vertex measures `μ_i` and their union.
#[derive(Debug, Clone)]
pub struct GifsMeasure {
    pub vertices: Vec<DiscreteMeasure>,
    /// Union of the vertex measures with total mass equal to the vertex count.
    pub union: DiscreteMeasure,
}

impl GifsMeasure {
    /// The union rescaled to a probability measure.
    pub fn combined(&self) -> DiscreteMeasure {
        self.union.normalized()
    }
}

/// Depth-`L` iterate of `μ_i = Σ_j Σ_{e ∈ E^{i,j}} p_e μ_j∘S_e⁻¹`, started from
/// unit atoms at the rectangle centers.
pub fn gifs_invariant_measure(spec: &GifsSpec, depth: u32) -> Result<GifsMeasure> {
    spec.validate()?;
    let mut level: Vec<Vec<(f64, f64, f64)>> = spec
        .vertices
        .iter()
        .map(|r| {
            let (cx, cy) = r.center();
            vec![(to_f64(cx), to_f64(cy), 1.0)]
        })
        .collect();
    for _ in 0..depth {
        let mut next = vec![Vec::new(); level.len()];
        for (e, p) in spec.edges.iter().zip(&spec.probabilities) {
            let p = to_f64(*p);
            let out: &mut Vec<(f64, f64, f64)> = &mut next[e.src - 1];
            for &(x, y, w) in &level[e.dst - 1] {
                let (u, v) = e.apply(x, y);
                out.push((u, v, p * w));
            }
        }
        for (i, atoms) in next.iter().enumerate() {
            let mass: f64 = atoms.iter().map(|a| a.2).sum();
            if (mass - 1.0).abs() > 1e-9 {
                return Err(Error::Invalid(format!(
                    "vertex {} mass drifted to {mass} during recursion",
                    i + 1
                )));
            }
        }
        level = next;
    }
    let prov = Provenance::GifsDepth {
        depth,
        normalized: false,
    };
    let mut vertices = Vec::with_capacity(level.len());
    let mut all = Vec::new();
    for atoms in &level {
        let mut v = Vec::with_capacity(atoms.len());
        for &(x, y, w) in atoms {
            v.push(Atom {
                point: ChartPoint::torus(x, y)?,
                weight: w,
            });
        }
        all.extend_from_slice(&v);
        vertices.push(DiscreteMeasure::new(v, prov)?);
    }
    let union = DiscreteMeasure::new(all, prov)?;
    Ok(GifsMeasure { vertices, union })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Ratio::new(n, d)
    }

    #[test]
    fn table_shape() {
        let g = GifsSpec::torus_table();
        assert_eq!(g.vertex_count(), 12);
        assert_eq!(g.edges.len(), 48);
        for (k, e) in g.edges.iter().enumerate() {
            assert_eq!(e.id, k + 1);
            assert_eq!(e.ratio, r(1, 2));
        }
        let adj = g.adjacency();
        assert_eq!(adj[0], vec![6, 7, 10]);
        assert_eq!(g.probabilities[0], r(1, 3));
        assert_eq!(g.probabilities[9], r(1, 6));
    }

    #[test]
    fn rows_are_stochastic() {
        let g = GifsSpec::torus_table();
        assert!(g.row_sums().iter().all(|s| *s == r(1, 1)));
        g.validate().unwrap();
    }

    #[test]
    fn deleted_edges_break_rows() {
        let g = GifsSpec::torus_table().without_edges(&[1]);
        assert_eq!(g.row_sums()[0], r(2, 3));
        assert!(matches!(g.validate(), Err(Error::Invalid(_))));
    }

    #[test]
    fn images_contained() {
        let g = GifsSpec::torus_table();
        for c in g.containment(1e-12) {
            assert!(
                c.contained,
                "edge {} leaves its rectangle by {}",
                c.edge, c.max_excess
            );
            assert_eq!(c.max_excess, 0.0);
        }
        // exact check on corners
        for e in &g.edges {
            let src = g.vertices[e.src - 1];
            for c in g.vertices[e.dst - 1].corners() {
                let (x, y) = e.apply_exact(c);
                assert!(x >= src.x0 && x <= src.x1 && y >= src.y0 && y <= src.y1);
            }
        }
    }

    #[test]
    fn translations_match_torus_maps_and_offsets() {
        let g = GifsSpec::torus_table();
        let maps = GifsSpec::torus_maps();
        assert_eq!(maps.len(), 4);
        for e in &g.edges {
            let m = e.torus_map.expect("every table edge names its torus map");
            let t = maps[m - 1].1;
            let (dx, dy) = (e.translation.0 - t.0, e.translation.1 - t.1);
            assert!(dx.is_integer() && dy.is_integer(), "edge {}", e.id);
            let d = e.corner_offset.unwrap();
            let w = g.vertices[e.dst - 1];
            let two = Ratio::from_integer(2);
            let ox = e.translation.0 - w.x0 / two - d.0;
            let oy = e.translation.1 - w.y0 / two - d.1;
            assert!(ox.is_integer() && oy.is_integer(), "edge {}", e.id);
        }
    }

    #[test]
    fn depth_zero_and_one() {
        let g = GifsSpec::torus_table();
        let m0 = gifs_invariant_measure(&g, 0).unwrap();
        assert_eq!(m0.union.len(), 12);
        assert_eq!(m0.union.total_mass(), 12.0);
        let ChartPoint::Torus { x, y } = m0.vertices[0].atoms()[0].point else {
            unreachable!()
        };
        assert_eq!((x, y), (0.375, 0.875));

        let m1 = gifs_invariant_measure(&g, 1).unwrap();
        let v1 = &m1.vertices[0];
        assert_eq!(v1.len(), 3);
        // e1: W7 center (1/8, 3/8) ↦ (1/16 + 1/4, 3/16 + 3/4)
        let want = [(0.3125, 0.9375), (0.4375, 0.9375), (0.4375, 0.8125)];
        for (a, w) in v1.atoms().iter().zip(want) {
            assert!((a.weight - 1.0 / 3.0).abs() < 1e-16);
            let ChartPoint::Torus { x, y } = a.point else {
                unreachable!()
            };
            assert!((x - w.0).abs() < 1e-15 && (y - w.1).abs() < 1e-15);
        }
        let c = m1.combined();
        assert!((c.total_mass() - 1.0).abs() < 1e-14);
        assert_eq!(
            c.provenance(),
            Provenance::GifsDepth {
                depth: 1,
                normalized: true
            }
        );
    }

    #[test]
    fn vertex_mass_conserved() {
        let g = GifsSpec::torus_table();
        for depth in 0..5 {
            let m = gifs_invariant_measure(&g, depth).unwrap();
            for v in &m.vertices {
                assert!((v.total_mass() - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn atoms_stay_in_their_rectangles() {
        let g = GifsSpec::torus_table();
        let m = gifs_invariant_measure(&g, 4).unwrap();
        for (i, v) in m.vertices.iter().enumerate() {
            for a in v.atoms() {
                let ChartPoint::Torus { x, y } = a.point else {
                    unreachable!()
                };
                assert!(g.vertices[i].contains_f64(x, y, 1e-12));
            }
        }
    }
}
