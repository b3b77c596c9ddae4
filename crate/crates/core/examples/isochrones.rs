//! Cells reachable within the travel-time threshold from one site, drawn
//! on a small grid with a wall.
//!
//! ```text
//! cargo run --release -p facplan --example isochrones -- 45
//! ```

use facplan::coverage::{compute_covered, FrictionGrid};
use facplan::Cell;

fn main() {
    let threshold: f64 = std::env::args().nth(1).and_then(|t| t.parse().ok()).unwrap_or(45.0);
    let (rows, cols) = (9, 13);
    let mut friction = FrictionGrid::uniform(rows, cols, 10.0);
    for r in 1..rows - 1 {
        friction.set_impassable(Cell::new(r, 8));
    }
    let site = Cell::new(4, 5);
    let iso = compute_covered(&friction, site, threshold);
    for r in 0..rows {
        let line: String = (0..cols)
            .map(|c| {
                let cell = Cell::new(r, c);
                if cell == site {
                    'S'
                } else if !friction.is_passable(cell) {
                    '#'
                } else if iso.cells.contains(cell.index(cols)) {
                    'o'
                } else {
                    '.'
                }
            })
            .collect();
        println!("{line}");
    }
    println!("{} cells within {threshold} minutes", iso.cells.count_ones(..));
}
