use std::sync::OnceLock;

use crate::C64;

const TABLE_ORDER: usize = 24;

type Table = Vec<Vec<C64>>;

fn build(max: usize, first: C64, step: impl Fn(&[C64], usize, usize) -> C64) -> Table {
    let mut rows: Table = vec![vec![C64::new(1.0, 0.0)]];
    if max == 0 {
        return rows;
    }
    let mut row1 = vec![C64::new(0.0, 0.0); 2];
    row1[1] = first;
    rows.push(row1);
    for k in 1..max {
        let prev = &rows[k];
        let next: Vec<C64> = (0..=k + 1).map(|p| if p == 0 { C64::new(0.0, 0.0) } else { step(prev, k, p) }).collect();
        rows.push(next);
    }
    rows
}

fn get(prev: &[C64], p: usize) -> C64 {
    prev.get(p).copied().unwrap_or(C64::new(0.0, 0.0))
}

fn angle_table(max: usize) -> Table {
    let i = C64::new(0.0, 1.0);
    build(max, i, |prev, _k, p| i * (p as f64) * get(prev, p) + i * get(prev, p - 1))
}

fn circle_table(max: usize) -> Table {
    let i = C64::new(0.0, 1.0);
    build(max, -i, |prev, k, p| -(k as f64) * get(prev, p) - i * get(prev, p - 1))
}

fn chain_table(max: usize) -> Table {
    let two_i = C64::new(0.0, 2.0);
    build(max, -two_i, |prev, k, p| -((k + p) as f64) * get(prev, p) - two_i * get(prev, p - 1))
}

fn cached(cell: &'static OnceLock<Table>, make: fn(usize) -> Table, k: usize) -> Vec<C64> {
    if k <= TABLE_ORDER {
        cell.get_or_init(|| make(TABLE_ORDER))[k].clone()
    } else {
        make(k).swap_remove(k)
    }
}

/// Row `k` of the table `a_{p,k}` (indexed by `p = 0..=k`) with
/// `d^k/dt^k f(e^{it}) = Σ_p a_{p,k} e^{ipt} f^(p)(e^{it})`.
pub fn angle_coefficients(k: usize) -> Vec<C64> {
    static CELL: OnceLock<Table> = OnceLock::new();
    cached(&CELL, angle_table, k)
}

/// Row `k` of the table `b_{p,k}` with
/// `f^(k)(e^{it}) = e^{-ikt} Σ_p b_{p,k} d^p/dt^p f(e^{it})`.
pub fn circle_coefficients(k: usize) -> Vec<C64> {
    static CELL: OnceLock<Table> = OnceLock::new();
    cached(&CELL, circle_table, k)
}

/// Row `k` of the table `c_{k,p}` with
/// `d^k/dx^k h(1 + 2i/(x − c)) = Σ_p c_{k,p} h^(p)(·) (x − c)^{-(k+p)}`,
/// valid for either Cayley direction (`c = i` forward, `c = 1` inverse).
pub fn cayley_chain_coefficients(k: usize) -> Vec<C64> {
    static CELL: OnceLock<Table> = OnceLock::new();
    cached(&CELL, chain_table, k)
}
