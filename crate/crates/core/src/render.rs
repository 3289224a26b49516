//! Figures as binary PPM images with CSV companions.
//!
//! Colors follow one convention: darker means membership in more (or
//! higher) groups, and the empty pattern is always the lightest color.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::assignment::{GroupAssignment, MembershipPattern};
use crate::error::{Error, Result};
use crate::network::TemporalNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    /// Parses `#rrggbb` or `rrggbb`.
    pub fn parse(s: &str) -> Result<Self> {
        let hex = s.trim().trim_start_matches('#');
        if hex.len() != 6 {
            return Err(Error::Validation(format!("color {s:?} is not rrggbb")));
        }
        let byte = |i: usize| {
            u8::from_str_radix(&hex[i..i + 2], 16)
                .map_err(|_| Error::Validation(format!("color {s:?} is not rrggbb")))
        };
        Ok(Rgb([byte(0)?, byte(2)?, byte(4)?]))
    }
}

const WHITE: Rgb = Rgb([255, 255, 255]);
const BLACK: Rgb = Rgb([0, 0, 0]);
const DIVIDER: Rgb = Rgb([220, 40, 40]);

/// Colors for non-empty patterns in rank order, plus the empty-pattern color.
#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    pub members: Vec<Rgb>,
    pub empty: Rgb,
}

impl Default for Palette {
    fn default() -> Self {
        let members = [
            "08306b", "2171b5", "6baed6", "08519c", "4292c6", "9ecae1", "3f007d", "6a51a3",
            "9e9ac8", "00441b", "238b45", "74c476",
        ];
        Palette {
            members: members
                .iter()
                .map(|c| Rgb::parse(c).expect("valid"))
                .collect(),
            empty: Rgb::parse("deebf7").expect("valid"),
        }
    }
}

impl Palette {
    /// Comma-separated colors; the last one is used for the empty pattern.
    pub fn parse(s: &str) -> Result<Self> {
        let mut colors: Vec<Rgb> = s.split(',').map(Rgb::parse).collect::<Result<_>>()?;
        let empty = colors
            .pop()
            .ok_or_else(|| Error::Validation("empty palette".into()))?;
        Ok(Palette {
            members: colors,
            empty,
        })
    }

    /// Color of each pattern in `patterns` (ranked by [`pattern_rank`]).
    fn assign(&self, patterns: &[MembershipPattern]) -> Result<Vec<(MembershipPattern, Rgb)>> {
        let mut distinct: Vec<MembershipPattern> = patterns.to_vec();
        distinct.sort_by_key(|p| pattern_rank(*p));
        distinct.dedup();
        let non_empty = distinct
            .iter()
            .filter(|p| **p != MembershipPattern::EMPTY)
            .count();
        if non_empty > self.members.len() {
            return Err(Error::Validation(format!(
                "{non_empty} distinct non-empty patterns but only {} palette colors; supply a longer palette with --palette",
                self.members.len()
            )));
        }
        let mut next = self.members.iter();
        Ok(distinct
            .into_iter()
            .map(|p| {
                let color = if p == MembershipPattern::EMPTY {
                    self.empty
                } else {
                    *next.next().expect("checked length")
                };
                (p, color)
            })
            .collect())
    }
}

/// Sort key: more groups first, then larger pattern value first.
pub fn pattern_rank(p: MembershipPattern) -> (std::cmp::Reverse<u32>, std::cmp::Reverse<u64>) {
    (std::cmp::Reverse(p.count()), std::cmp::Reverse(p.0))
}

/// Node order placing richer patterns first; stable within a pattern block.
pub fn pattern_order(row: &[MembershipPattern]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by_key(|&i| pattern_rank(row[i]));
    order
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, fill: Rgb) -> Self {
        Image {
            width,
            height,
            pixels: fill.0.repeat(width * height),
        }
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let at = 3 * (y * self.width + x);
        Rgb([self.pixels[at], self.pixels[at + 1], self.pixels[at + 2]])
    }

    pub fn set(&mut self, x: usize, y: usize, color: Rgb) {
        let at = 3 * (y * self.width + x);
        self.pixels[at..at + 3].copy_from_slice(&color.0);
    }

    fn fill_cell(&mut self, col: usize, row: usize, scale: usize, color: Rgb) {
        for y in row * scale..(row + 1) * scale {
            for x in col * scale..(col + 1) * scale {
                self.set(x, y, color);
            }
        }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_ppm()).map_err(|e| Error::io(path, e))
    }
}

/// Node-by-layer grid: row `i` is node `i`, column `l` is layer `l`.
pub fn assignment_heatmap(g: &GroupAssignment, palette: &Palette, scale: usize) -> Result<Image> {
    let scale = scale.max(1);
    let colors = palette.assign(g.patterns())?;
    let color_of = |p: MembershipPattern| colors.iter().find(|c| c.0 == p).expect("assigned").1;
    let mut img = Image::new(g.layer_count() * scale, g.node_count() * scale, WHITE);
    for layer in 0..g.layer_count() {
        for node in 0..g.node_count() {
            img.fill_cell(layer, node, scale, color_of(g.pattern(layer, node)));
        }
    }
    Ok(img)
}

/// Adjacency of one layer with rows and columns in [`pattern_order`], and
/// divider lines at the start of each new pattern block.
pub fn permuted_adjacency(
    net: &TemporalNetwork,
    g: &GroupAssignment,
    layer: usize,
    scale: usize,
) -> Result<(Image, Vec<usize>)> {
    if net.node_count() != g.node_count() || net.layer_count() != g.layer_count() {
        return Err(Error::DimensionMismatch(
            "network and assignment differ in shape".into(),
        ));
    }
    if layer >= net.layer_count() {
        return Err(Error::Range {
            what: "layer",
            value: layer,
            limit: net.layer_count(),
        });
    }
    let scale = scale.max(1);
    let n = net.node_count();
    let row = g.layer_patterns(layer);
    let order = pattern_order(row);
    let mut img = Image::new(n * scale, n * scale, WHITE);
    for (y, &i) in order.iter().enumerate() {
        for (x, &j) in order.iter().enumerate() {
            if i != j && net.is_adjacent(layer, i, j) {
                img.fill_cell(x, y, scale, BLACK);
            }
        }
    }
    for pos in 1..n {
        if row[order[pos]] != row[order[pos - 1]] {
            let at = pos * scale;
            for t in 0..n * scale {
                img.set(at, t, DIVIDER);
                img.set(t, at, DIVIDER);
            }
        }
    }
    Ok((img, order))
}

/// Edge count and pair count between node-layers of pattern `a` and of
/// pattern `b` in one layer (pairs of distinct nodes, unordered).
pub fn block_density(
    net: &TemporalNetwork,
    g: &GroupAssignment,
    layer: usize,
    a: MembershipPattern,
    b: MembershipPattern,
) -> (usize, usize) {
    let row = g.layer_patterns(layer);
    let (mut edges, mut pairs) = (0, 0);
    for i in 0..net.node_count() {
        for j in i + 1..net.node_count() {
            let (pi, pj) = (row[i], row[j]);
            if (pi == a && pj == b) || (pi == b && pj == a) {
                pairs += 1;
                edges += usize::from(net.is_adjacent(layer, i, j));
            }
        }
    }
    (edges, pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderTarget {
    AssignmentHeatmap,
    PermutedAdjacency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSpec {
    pub target: RenderTarget,
    /// Layers to draw for adjacency figures; `None` draws every layer.
    pub layers: Option<Vec<usize>>,
    pub palette: Palette,
    /// Output path stem; extensions and layer suffixes are appended.
    pub output: PathBuf,
    pub scale: usize,
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes the figure(s) of `spec` and returns the paths written.
pub fn render(
    spec: &RenderSpec,
    g: &GroupAssignment,
    net: Option<&TemporalNetwork>,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    match spec.target {
        RenderTarget::AssignmentHeatmap => {
            let img = assignment_heatmap(g, &spec.palette, spec.scale)?;
            let ppm = with_suffix(&spec.output, ".ppm");
            img.write_ppm(&ppm)?;
            let mut csv = String::from("node");
            for layer in 0..g.layer_count() {
                csv.push_str(&format!(",layer{layer}"));
            }
            csv.push('\n');
            for node in 0..g.node_count() {
                csv.push_str(&node.to_string());
                for layer in 0..g.layer_count() {
                    csv.push_str(&format!(",{}", g.pattern(layer, node).0));
                }
                csv.push('\n');
            }
            let csv_path = with_suffix(&spec.output, ".csv");
            write_text(&csv_path, &csv)?;
            written.extend([ppm, csv_path]);
        }
        RenderTarget::PermutedAdjacency => {
            let net = net.ok_or_else(|| {
                Error::Config("the permuted adjacency figure needs a network".into())
            })?;
            let layers = spec
                .layers
                .clone()
                .unwrap_or_else(|| (0..g.layer_count()).collect());
            for layer in layers {
                let (img, order) = permuted_adjacency(net, g, layer, spec.scale)?;
                let ppm = with_suffix(&spec.output, &format!("_layer{layer}.ppm"));
                img.write_ppm(&ppm)?;
                let mut csv = String::from("position,node,pattern\n");
                for (pos, &node) in order.iter().enumerate() {
                    csv.push_str(&format!("{pos},{node},{}\n", g.pattern(layer, node).0));
                }
                let csv_path = with_suffix(&spec.output, &format!("_layer{layer}.csv"));
                write_text(&csv_path, &csv)?;
                written.extend([ppm, csv_path]);
            }
        }
    }
    Ok(written)
}
