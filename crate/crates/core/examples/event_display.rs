//! One shower event, the alternative stochastic AD paired with it, and an
//! ASCII rendering of the material map. `cargo run --example event_display [event]`.

use stochbranch::simulator::{display_event, material_map};
use stochbranch::{DetectorParams, Mode, SimConfig};

fn main() -> stochbranch::Result<()> {
    let event = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0);
    let config = SimConfig::new(Mode::Shower);
    let params = DetectorParams::default();
    let shown = display_event(&config, &params, 0, event, true)?;
    let p = &shown.primal;
    println!(
        "primal: {} hits, {} steps, {:?}, loss {:.4}",
        p.hits.len(),
        p.n_steps,
        p.terminated_by,
        config.loss(p)
    );
    println!("weighted alternatives seen: {}", shown.candidates);
    match &shown.alternative {
        Some(alt) => {
            let d = alt.divergence;
            println!(
                "alternative: flip draw {} at step {} to {}, pruned weight {:.4}, coupled {:.0}%",
                d.draw_id,
                d.step,
                d.flipped_value,
                alt.pruned_weight,
                100.0 * alt.coupled_fraction.unwrap_or(0.0)
            );
            println!("  {} hits, loss {:.4}", alt.event.hits.len(), config.loss(&alt.event));
        }
        None => println!("no alternative"),
    }

    // Material map with primal hits (o), alternative hits (x) and shared ones (*).
    let (n, e) = (48i32, 6.0);
    let cell = |x: f64, y: f64| (((x + e) / (2.0 * e) * n as f64) as i32, ((e - y) / (2.0 * e) * n as f64) as i32);
    let mut rows: Vec<Vec<char>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let x = -e + (i as f64 + 0.5) * 2.0 * e / n as f64;
                    let y = e - (j as f64 + 0.5) * 2.0 * e / n as f64;
                    let m = material_map([x, y], &params).map_or(0.0, |m| m.value);
                    [' ', '.', ':', '#'][((m / 0.5) * 3.99) as usize]
                })
                .collect()
        })
        .collect();
    let mut mark = |hits: &[stochbranch::simulator::Hit], c: char| {
        for h in hits {
            let (i, j) = cell(h.pos[0], h.pos[1]);
            if (0..n).contains(&i) && (0..n).contains(&j) {
                let at = &mut rows[j as usize][i as usize];
                *at = if *at == 'o' && c == 'x' { '*' } else { c };
            }
        }
    };
    mark(&p.hits, 'o');
    if let Some(alt) = &shown.alternative {
        mark(&alt.event.hits, 'x');
    }
    for r in rows {
        println!("{}", r.into_iter().collect::<String>());
    }
    Ok(())
}
