//! Snapshot renderers: SVG frames with the usual color coding (seed green,
//! retired black, roots red, followers blue) and a coarse ASCII view for
//! terminals.

use std::io::Write;
use std::path::Path;

use crate::grid::Node;
use crate::model::{Configuration, ParticleState};

const SQRT3_2: f64 = 0.866_025_403_784_438_6;
const SCALE: f64 = 36.0;

/// Cartesian layout with unit edge length; y grows downward so the global
/// clockwise direction order is clockwise on screen.
fn layout(node: Node) -> (f64, f64) {
    let x = node.q as f64 + node.r as f64 / 2.0;
    let y = node.r as f64 * SQRT3_2;
    (x, y)
}

fn color(p_state: ParticleState, is_seed: bool) -> &'static str {
    if is_seed {
        return "#2e8b57"; // green
    }
    match p_state {
        ParticleState::Retired => "#000000",
        ParticleState::Root => "#d62728",
        ParticleState::Follower => "#1f77b4",
        ParticleState::Inactive => "#c8c8c8",
    }
}

/// Renders the occupied set and its immediate lattice neighborhood as an
/// SVG 1.1 document. Expanded particles are drawn as two circles joined by a
/// thick bar.
pub fn render_svg(cfg: &Configuration) -> String {
    let occupied: Vec<Node> = cfg.occupied_nodes().collect();
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    let mut area: Vec<Node> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for &node in &occupied {
        for candidate in std::iter::once(node).chain(node.neighbors()) {
            if seen.insert(candidate) {
                area.push(candidate);
                let (x, y) = layout(candidate);
                min_x = min_x.min(x);
                min_y = min_y.min(y);
                max_x = max_x.max(x);
                max_y = max_y.max(y);
            }
        }
    }
    let pad = 0.8;
    let view = (
        (min_x - pad) * SCALE,
        (min_y - pad) * SCALE,
        (max_x - min_x + 2.0 * pad) * SCALE,
        (max_y - min_y + 2.0 * pad) * SCALE,
    );
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         viewBox=\"{:.1} {:.1} {:.1} {:.1}\" width=\"{:.0}\" height=\"{:.0}\">\n",
        view.0, view.1, view.2, view.3, view.2, view.3
    ));

    // Underlying lattice mesh over the drawn neighborhood.
    svg.push_str("<g stroke=\"#dddddd\" stroke-width=\"1\">\n");
    for &node in &area {
        let (x1, y1) = layout(node);
        for nb in node.neighbors() {
            // Draw each mesh edge once.
            if seen.contains(&nb) && (node.q, node.r) < (nb.q, nb.r) {
                let (x2, y2) = layout(nb);
                svg.push_str(&format!(
                    "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\"/>\n",
                    x1 * SCALE,
                    y1 * SCALE,
                    x2 * SCALE,
                    y2 * SCALE
                ));
            }
        }
    }
    svg.push_str("</g>\n");

    // Expanded particles: a thick bar joining the two body circles.
    for (_, p) in cfg.particles() {
        if p.is_expanded() {
            let (x1, y1) = layout(p.head);
            let (x2, y2) = layout(p.tail);
            svg.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" \
                 stroke=\"{}\" stroke-width=\"{:.1}\"/>\n",
                x1 * SCALE,
                y1 * SCALE,
                x2 * SCALE,
                y2 * SCALE,
                color(p.state, p.is_seed),
                0.22 * SCALE
            ));
        }
    }

    // Body circles.
    for (_, p) in cfg.particles() {
        let fill = color(p.state, p.is_seed);
        let mut nodes = vec![p.head];
        if p.is_expanded() {
            nodes.push(p.tail);
        }
        for node in nodes {
            let (x, y) = layout(node);
            svg.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"{:.1}\" fill=\"{}\"/>\n",
                x * SCALE,
                y * SCALE,
                0.33 * SCALE,
                fill
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_svg(cfg: &Configuration, path: &Path) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(render_svg(cfg).as_bytes())
}

/// Terminal rendering: one glyph per occupied node, rows by `r`, columns
/// skewed so lattice neighbors line up. Heads are uppercase, an expanded
/// particle's tail is lowercase; the seed is `S`, retired `#`, inactive `o`.
pub fn render_ascii(cfg: &Configuration) -> String {
    let mut cells: Vec<(i32, i32, char)> = Vec::new();
    for (_, p) in cfg.particles() {
        let head_glyph = if p.is_seed {
            'S'
        } else {
            match p.state {
                ParticleState::Inactive => 'o',
                ParticleState::Follower => 'F',
                ParticleState::Root => 'R',
                ParticleState::Retired => '#',
            }
        };
        cells.push((p.head.r, 2 * p.head.q + p.head.r, head_glyph));
        if p.is_expanded() {
            let tail_glyph = match p.state {
                ParticleState::Follower => 'f',
                ParticleState::Root => 'r',
                _ => '~',
            };
            cells.push((p.tail.r, 2 * p.tail.q + p.tail.r, tail_glyph));
        }
    }
    let min_row = cells.iter().map(|c| c.0).min().unwrap_or(0);
    let max_row = cells.iter().map(|c| c.0).max().unwrap_or(0);
    let min_col = cells.iter().map(|c| c.1).min().unwrap_or(0);
    let mut out = String::new();
    for row in min_row..=max_row {
        let mut line: Vec<char> = Vec::new();
        for &(r, c, glyph) in &cells {
            if r == row {
                let idx = (c - min_col) as usize;
                if line.len() <= idx {
                    line.resize(idx + 1, ' ');
                }
                line[idx] = glyph;
            }
        }
        out.push_str(&line.iter().collect::<String>());
        out.push('\n');
    }
    out
}
