//! Approximate shortest rotation through a set of ports.
//!
//! Nearest-neighbour construction followed by 2-opt and single-port
//! relocation until no move improves. Distances may be asymmetric, so
//! every candidate tour is priced in full.

use crate::error::{Error, Result};
use crate::model::Instance;

/// Length of the closed tour, or an error naming the first missing leg.
pub fn tour_length(instance: &Instance, tour: &[usize]) -> Result<f64> {
    let n = tour.len();
    let mut total = 0.0;
    for i in 0..n {
        total += instance.require_distance(tour[i], tour[(i + 1) % n])?.distance;
    }
    Ok(total)
}

/// Orders `ports` into a short rotation. The result is never longer than
/// the input order taken as a tour.
pub fn order_ports(instance: &Instance, ports: &[usize]) -> Result<Vec<usize>> {
    for (i, &p) in ports.iter().enumerate() {
        if p >= instance.port_count() {
            return Err(Error::InvalidRotation(format!("port index {p} out of range")));
        }
        if ports[..i].contains(&p) {
            return Err(Error::InvalidRotation(format!(
                "port `{}` listed twice",
                instance.ports[p].id
            )));
        }
    }
    if ports.len() < 2 {
        return Err(Error::InvalidRotation(format!(
            "needs at least 2 ports, got {}",
            ports.len()
        )));
    }
    for &a in ports {
        for &b in ports {
            if a != b {
                instance.require_distance(a, b)?;
            }
        }
    }
    let dist = |a: usize, b: usize| instance.distance(a, b).map_or(0.0, |e| e.distance);
    let length = |t: &[usize]| -> f64 { (0..t.len()).map(|i| dist(t[i], t[(i + 1) % t.len()])).sum() };

    let mut nn = Vec::with_capacity(ports.len());
    let mut left: Vec<usize> = ports.to_vec();
    nn.push(left.remove(0));
    while !left.is_empty() {
        let last = *nn.last().expect("tour is non-empty");
        let (k, _) = left
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| dist(last, a).total_cmp(&dist(last, b)))
            .expect("ports remain");
        nn.push(left.remove(k));
    }
    let from_nn = improve(nn, &length);
    let from_input = improve(ports.to_vec(), &length);
    Ok(if length(&from_input) < length(&from_nn) {
        from_input
    } else {
        from_nn
    })
}

fn improve(mut tour: Vec<usize>, length: &impl Fn(&[usize]) -> f64) -> Vec<usize> {
    let n = tour.len();
    if n < 4 {
        // Only orientation matters for 3 ports; try the reverse.
        if n == 3 {
            let rev = vec![tour[0], tour[2], tour[1]];
            if length(&rev) < length(&tour) {
                return rev;
            }
        }
        return tour;
    }
    let mut best = length(&tour);
    let mut candidate = tour.clone();
    loop {
        let mut improved = false;
        for i in 1..n - 1 {
            for j in i + 1..n {
                candidate.copy_from_slice(&tour);
                candidate[i..=j].reverse();
                let len = length(&candidate);
                if len < best {
                    best = len;
                    tour.copy_from_slice(&candidate);
                    improved = true;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                candidate.copy_from_slice(&tour);
                let p = candidate.remove(i);
                candidate.insert(j, p);
                let len = length(&candidate);
                if len < best {
                    best = len;
                    tour.copy_from_slice(&candidate);
                    improved = true;
                }
            }
        }
        if !improved {
            return tour;
        }
    }
}
