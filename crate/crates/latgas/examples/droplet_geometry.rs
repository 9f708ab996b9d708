//! Cluster geometry on the torus: quasi-squares, rectangles, freeness.
//!
//! The nucleation analysis rests on a few geometric primitives, shown
//! here on a hand-built configuration:
//!
//! * clusterisation into connected components, with each component's
//!   circumscribed rectangle and quasi-square label when it has one;
//! * torus-aware distances between rectangles;
//! * the free/trapped classification: a particle is free when, after
//!   iteratively peeling other free particles away, it can walk to a
//!   given distance without ever stepping next to an obstacle.
//!
//! Run with: `cargo run --example droplet_geometry`

use latgas::geometry::{clusterise, free_particles, in_r, FreeStatus};
use latgas::lattice::{Configuration, Site};
use latgas::params::{derive, ModelParams};

fn main() -> latgas::Result<()> {
    let params = ModelParams::standard(1.0, 1.6, 3.0, 2.4);
    let derived = derive(&params)?;

    let mut config = Configuration::empty(18)?;
    // A 2x2 square, a 2x3 oblong, an L-shaped pentomino, a dimer that
    // wraps the x-boundary, a hollow ring with one particle sealed
    // inside it, and a lone particle in open vapour.
    let mut ring: Vec<(i32, i32)> = Vec::new();
    for x in 10i32..=14 {
        for y in 10i32..=14 {
            if (x - 12).abs().max((y - 12).abs()) == 2 {
                ring.push((x, y));
            }
        }
    }
    let shapes: &[&[(i32, i32)]] = &[
        &[(2, 2), (3, 2), (2, 3), (3, 3)],                     // quasi-square 2x2
        &[(9, 2), (10, 2), (11, 2), (9, 3), (10, 3), (11, 3)], // quasi-square 2x3
        &[(3, 9), (3, 10), (3, 11), (4, 11), (5, 11)],         // L-pentomino
        &[(17, 6), (0, 6)],                                    // wrapping dimer
        &ring,
        &[(12, 12)], // sealed inside the ring
        &[(8, 16)],  // free vapour particle
    ];
    for shape in shapes {
        for &(x, y) in *shape {
            config.add_particle(Site::new(x, y))?;
        }
    }

    println!(
        "configuration: L={} N={} H={:.1}, subcritical: {}",
        config.side(),
        config.particle_count(),
        config.energy(params.u),
        in_r(&config, &derived)
    );

    let parts = clusterise(&config);
    println!(
        "\n{} clusters, {} singles:",
        parts.clusters.len(),
        parts.singles.len()
    );
    for cluster in &parts.clusters {
        let rect = cluster.rc.as_ref().expect("nothing wraps half the torus");
        println!(
            "  {:>2} sites in a {}x{} rectangle at ({},{}){}",
            cluster.volume(),
            rect.dims().0,
            rect.dims().1,
            rect.x0,
            rect.y0,
            match cluster.quasi_square {
                Some((a, b)) => format!("  [quasi-square {a}x{b}]"),
                None => String::new(),
            }
        );
    }

    // Rectangle distances drive the cloud decomposition: 0 = overlap,
    // 1 = touching, k = closest points k apart along the worse axis.
    let r_square = parts.clusters[0].rc.as_ref().unwrap();
    let r_oblong = parts.clusters[1].rc.as_ref().unwrap();
    println!(
        "\ndistance between the 2x2 and the 2x3 rectangles: {}",
        r_square.distance(r_oblong, config.side())
    );

    // Freeness at window 3. Cluster members are Clusterised. The vapour
    // single walks away cleanly: Free. The particle inside the ring
    // cannot take even one step without standing next to the ring:
    // Trapped.
    let report = free_particles(&config, 3);
    let mut tally = (0u32, 0u32, 0u32);
    for status in report.status.values() {
        match status {
            FreeStatus::Clusterised => tally.0 += 1,
            FreeStatus::Free => tally.1 += 1,
            FreeStatus::Trapped => tally.2 += 1,
        }
    }
    println!(
        "\nfreeness at window {}: {} clusterised, {} free, {} trapped",
        report.window, tally.0, tally.1, tally.2
    );
    let sealed = config.particle_at(Site::new(12, 12)).unwrap();
    let vapour = config.particle_at(Site::new(8, 16)).unwrap();
    println!("particle sealed in the ring: {:?}", report.status_of(sealed));
    println!("vapour particle:             {:?}", report.status_of(vapour));
    assert_eq!(report.status_of(sealed), Some(FreeStatus::Trapped));
    assert_eq!(report.status_of(vapour), Some(FreeStatus::Free));
    if let Some((pid, path)) = report.peel_order.first() {
        println!(
            "escape witness for particle {pid}: {} steps ending at ({}, {})",
            path.len() - 1,
            path.last().unwrap().x,
            path.last().unwrap().y
        );
    }
    Ok(())
}
