//! Hopcroft–Karp matching on the comparability bipartite graph.
//!
//! Left copy of `i` is joined to right copy of `j` whenever `i < j`. A
//! maximum matching of size `m` gives a chain cover with `n - m` chains,
//! which by Dilworth equals the width.

use std::collections::VecDeque;

use super::Poset;

const FREE: usize = usize::MAX;

pub(super) fn max_matching(p: &Poset) -> usize {
    let n = p.len();
    let mut match_left = vec![FREE; n];
    let mut match_right = vec![FREE; n];
    let mut dist = vec![0usize; n];
    let mut size = 0;

    // greedy warm start
    for (i, left) in match_left.iter_mut().enumerate() {
        if let Some(j) = p.above(i).find(|&j| match_right[j] == FREE) {
            *left = j;
            match_right[j] = i;
            size += 1;
        }
    }

    loop {
        // BFS layering from free left vertices
        let mut queue = VecDeque::new();
        let mut found = false;
        for i in 0..n {
            if match_left[i] == FREE {
                dist[i] = 0;
                queue.push_back(i);
            } else {
                dist[i] = usize::MAX;
            }
        }
        while let Some(i) = queue.pop_front() {
            for j in p.above(i) {
                let k = match_right[j];
                if k == FREE {
                    found = true;
                } else if dist[k] == usize::MAX {
                    dist[k] = dist[i] + 1;
                    queue.push_back(k);
                }
            }
        }
        if !found {
            break;
        }
        let mut iter_pos = vec![0usize; n];
        for i in 0..n {
            if match_left[i] == FREE && augment(p, i, &mut match_left, &mut match_right, &mut dist, &mut iter_pos) {
                size += 1;
            }
        }
    }
    size
}

fn augment(
    p: &Poset,
    root: usize,
    match_left: &mut [usize],
    match_right: &mut [usize],
    dist: &mut [usize],
    iter_pos: &mut [usize],
) -> bool {
    // iterative DFS along the BFS layers
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(root, p.above(root).collect())];
    let mut path: Vec<(usize, usize)> = Vec::new();
    while let Some((i, succ)) = stack.last() {
        let i = *i;
        if iter_pos[i] >= succ.len() {
            dist[i] = usize::MAX;
            stack.pop();
            path.pop();
            continue;
        }
        let j = succ[iter_pos[i]];
        iter_pos[i] += 1;
        let k = match_right[j];
        if k == FREE {
            path.push((i, j));
            for &(a, b) in &path {
                match_left[a] = b;
                match_right[b] = a;
            }
            return true;
        }
        if dist[k] == dist[i] + 1 {
            path.push((i, j));
            stack.push((k, p.above(k).collect()));
        }
    }
    false
}
