//! Brute-force point enumeration over `F_p`.
//!
//! The core loop fixes all free variables but the last ("prefix"), collapses
//! the cheapest equation to a univariate coefficient vector by Horner, scans
//! the last variable, and checks the remaining equations only at the roots.
//! Projective and multiprojective ambients are reduced to affine charts with
//! the first nonzero coordinate normalized to 1; weighted double covers are
//! counted through the base character sum `sum (1 + chi(F))` with
//! `chi(0) = 0`.

use super::arith::{is_prime, legendre_table};
use super::{Ambient, CountCtx, CountError, CountTarget};
use crate::graph::Graph;
use crate::poly::{inv_mod_u64, mul_mod_u64, FpPoly, MultiPoly};

/// Top-level entry: count the points of a model at `p`.
pub fn count(target: &CountTarget, p: u64, ctx: &CountCtx) -> Result<u128, CountError> {
    check_prime(p)?;
    let nv = target.ambient.var_count();
    for (i, e) in target.eqs.iter().enumerate() {
        if e.nvars() != nv {
            return Err(CountError::BadModel(format!(
                "equation {i} has {} variables, ambient has {nv}",
                e.nvars()
            )));
        }
    }
    match &target.ambient {
        Ambient::Proj { coords } => {
            if target.branch.is_some() {
                return Err(CountError::BadModel(
                    "projective ambient takes no branch polynomial".into(),
                ));
            }
            count_projective_inner(&target.eqs, *coords, p, ctx)
        }
        Ambient::WeightedCover { t_weight, coords } => {
            let f = target.branch.as_ref().ok_or_else(|| {
                CountError::BadModel("weighted cover needs a branch polynomial".into())
            })?;
            if !target.eqs.is_empty() {
                return Err(CountError::BadModel(
                    "weighted cover carries its branch only, no extra equations".into(),
                ));
            }
            count_weighted_double_cover_inner(*t_weight, f, *coords, p, ctx)
        }
        Ambient::MultiProj { blocks } => match &target.branch {
            None => count_multiprojective_inner(&target.eqs, blocks, p, ctx),
            Some(f) => count_multiproj_cover(&target.eqs, f, blocks, p, ctx),
        },
    }
}

fn check_prime(p: u64) -> Result<(), CountError> {
    if p == 2 {
        return Err(CountError::EvenPrimeUnsupported);
    }
    if !is_prime(p) {
        return Err(CountError::NotPrime(p));
    }
    Ok(())
}

fn pow_u128(p: u64, k: usize) -> u128 {
    let mut acc = 1u128;
    for _ in 0..k {
        acc = acc.saturating_mul(p as u128);
    }
    acc
}

/// Points of `P^{coords-1}` over `F_p`.
fn projective_space_size(p: u64, coords: usize) -> u128 {
    (pow_u128(p, coords) - 1) / (p as u128 - 1)
}

// ---------------------------------------------------------------------------
// Affine core
// ---------------------------------------------------------------------------

/// How a variable of the original system is treated in a chart.
#[derive(Clone, Copy)]
enum VarSpec {
    Free,
    Fixed(u64),
}

/// Substitute fixed values, renumber the free variables in order.
fn specialize(fp: &FpPoly, spec: &[VarSpec]) -> FpPoly {
    assert_eq!(spec.len(), fp.nvars);
    let p = fp.p;
    let free: Vec<usize> = (0..spec.len())
        .filter(|&i| matches!(spec[i], VarSpec::Free))
        .collect();
    let mut terms: std::collections::BTreeMap<Vec<u8>, u64> = std::collections::BTreeMap::new();
    'term: for (e, c) in &fp.terms {
        let mut coeff = *c;
        let mut ne = vec![0u8; free.len()];
        for (i, &x) in e.iter().enumerate() {
            if x == 0 {
                continue;
            }
            match spec[i] {
                VarSpec::Free => {
                    ne[free.iter().position(|&f| f == i).unwrap()] = x;
                }
                VarSpec::Fixed(v) => {
                    let mut pw = 1u64;
                    for _ in 0..x {
                        pw = mul_mod_u64(pw, v % p, p);
                    }
                    coeff = mul_mod_u64(coeff, pw, p);
                    if coeff == 0 {
                        continue 'term;
                    }
                }
            }
        }
        let slot = terms.entry(ne).or_insert(0);
        *slot = (*slot + coeff) % p;
    }
    FpPoly {
        nvars: free.len(),
        p,
        terms: terms.into_iter().filter(|&(_, c)| c != 0).collect(),
    }
}

/// Power table `pows[a][e] = a^e mod p` for all residues and exponents.
fn power_table(p: u64, max_exp: u8) -> Vec<Vec<u64>> {
    (0..p)
        .map(|a| {
            let mut row = Vec::with_capacity(max_exp as usize + 1);
            let mut acc = 1u64;
            row.push(1);
            for _ in 0..max_exp {
                acc = mul_mod_u64(acc, a, p);
                row.push(acc);
            }
            row
        })
        .collect()
}

fn eval_with_pows(fp: &FpPoly, point: &[u64], pows: &[Vec<u64>]) -> u64 {
    let p = fp.p;
    let mut acc = 0u64;
    for (e, c) in &fp.terms {
        let mut t = *c;
        for (i, &x) in e.iter().enumerate() {
            if x > 0 {
                t = mul_mod_u64(t, pows[point[i] as usize][x as usize], p);
            }
        }
        acc = (acc + t) % p;
    }
    acc
}

/// Count common zeros of `eqs` over `F_p^k`. The equations must already be
/// specialized to exactly `k` variables.
fn affine_zero_count(eqs: &[FpPoly], k: usize, p: u64, ctx: &CountCtx) -> u128 {
    ctx.record(pow_u128(p, k));
    // constant equations decide immediately
    let mut live: Vec<&FpPoly> = Vec::new();
    for e in eqs {
        if e.is_zero() {
            continue;
        }
        if e.terms.iter().all(|(ex, _)| ex.iter().all(|&x| x == 0)) {
            return 0; // nonzero constant
        }
        live.push(e);
    }
    if live.is_empty() {
        return pow_u128(p, k);
    }
    if k == 0 {
        return 1; // only zero equations remain
    }
    live.sort_by_key(|e| e.terms.len());
    let max_exp = live
        .iter()
        .flat_map(|e| e.terms.iter().flat_map(|(ex, _)| ex.iter().copied()))
        .max()
        .unwrap_or(0);
    let pows = power_table(p, max_exp);

    let first = live[0];
    let rest = &live[1..];
    let last = k - 1;
    let d0 = first.degree_in(last) as usize;
    let mut count: u128 = 0;
    let mut point = vec![0u64; k];
    let mut coeffs = vec![0u64; d0 + 1];
    loop {
        // univariate coefficients of the first equation on this prefix
        coeffs.iter_mut().for_each(|c| *c = 0);
        for (e, c) in &first.terms {
            let mut t = *c;
            for i in 0..last {
                if e[i] > 0 {
                    t = mul_mod_u64(t, pows[point[i] as usize][e[i] as usize], p);
                }
            }
            let slot = &mut coeffs[e[last] as usize];
            *slot = (*slot + t) % p;
        }
        'xs: for x in 0..p {
            // Horner
            let mut v = 0u64;
            for &c in coeffs.iter().rev() {
                v = (mul_mod_u64(v, x, p) + c) % p;
            }
            if v != 0 {
                continue;
            }
            point[last] = x;
            for e in rest {
                if eval_with_pows(e, &point, &pows) != 0 {
                    continue 'xs;
                }
            }
            count += 1;
        }
        // advance prefix odometer
        let mut i = 0;
        loop {
            if i == last {
                return count;
            }
            point[i] += 1;
            if point[i] < p {
                break;
            }
            point[i] = 0;
            i += 1;
        }
    }
}

/// `sum over F_p^k of chi(f(x))` via the same prefix/Horner loop.
fn affine_chi_sum(f: &FpPoly, k: usize, p: u64, chi: &[i8], ctx: &CountCtx) -> i128 {
    ctx.record(pow_u128(p, k));
    if f.is_zero() {
        return 0;
    }
    if k == 0 {
        let v = f.eval(&[]);
        return chi[v as usize] as i128;
    }
    let max_exp = f.terms.iter().flat_map(|(ex, _)| ex.iter().copied()).max().unwrap_or(0);
    let pows = power_table(p, max_exp);
    let last = k - 1;
    let d0 = f.degree_in(last) as usize;
    let mut sum: i128 = 0;
    let mut point = vec![0u64; k];
    let mut coeffs = vec![0u64; d0 + 1];
    loop {
        coeffs.iter_mut().for_each(|c| *c = 0);
        for (e, c) in &f.terms {
            let mut t = *c;
            for i in 0..last {
                if e[i] > 0 {
                    t = mul_mod_u64(t, pows[point[i] as usize][e[i] as usize], p);
                }
            }
            let slot = &mut coeffs[e[last] as usize];
            *slot = (*slot + t) % p;
        }
        for x in 0..p {
            let mut v = 0u64;
            for &c in coeffs.iter().rev() {
                v = (mul_mod_u64(v, x, p) + c) % p;
            }
            sum += chi[v as usize] as i128;
        }
        let mut i = 0;
        loop {
            if i == last {
                return sum;
            }
            point[i] += 1;
            if point[i] < p {
                break;
            }
            point[i] = 0;
            i += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Public counters
// ---------------------------------------------------------------------------

/// Common zeros in affine space `F_p^n` (n = variable count of the system).
pub fn count_affine(eqs: &[MultiPoly], p: u64, ctx: &CountCtx) -> Result<u128, CountError> {
    check_prime(p)?;
    let n = eqs.first().map(|e| e.nvars()).unwrap_or(0);
    ctx.check_budget(pow_u128(p, n))?;
    let fps: Vec<FpPoly> = eqs.iter().map(|e| e.reduce_mod_p(p)).collect::<Result<_, _>>()?;
    Ok(affine_zero_count(&fps, n, p, ctx))
}

/// Points of the projective variety cut out by homogeneous equations.
pub fn count_projective(eqs: &[MultiPoly], p: u64, ctx: &CountCtx) -> Result<u128, CountError> {
    check_prime(p)?;
    let coords = eqs
        .first()
        .map(|e| e.nvars())
        .ok_or_else(|| CountError::BadModel("projective count needs at least one equation".into()))?;
    count_projective_inner(eqs, coords, p, ctx)
}

fn count_projective_inner(
    eqs: &[MultiPoly],
    coords: usize,
    p: u64,
    ctx: &CountCtx,
) -> Result<u128, CountError> {
    if coords == 0 {
        return Err(CountError::BadModel("projective space needs coordinates".into()));
    }
    for (i, e) in eqs.iter().enumerate() {
        if !e.is_zero() && e.homogeneous_degree().is_none() {
            return Err(CountError::NotHomogeneous { eq_index: i });
        }
    }
    ctx.check_budget(projective_space_size(p, coords))?;
    let fps: Vec<FpPoly> = eqs.iter().map(|e| e.reduce_mod_p(p)).collect::<Result<_, _>>()?;
    let mut total: u128 = 0;
    for c in 0..coords {
        let spec: Vec<VarSpec> = (0..coords)
            .map(|i| {
                if i < c {
                    VarSpec::Fixed(0)
                } else if i == c {
                    VarSpec::Fixed(1)
                } else {
                    VarSpec::Free
                }
            })
            .collect();
        let chart: Vec<FpPoly> = fps.iter().map(|f| specialize(f, &spec)).collect();
        total += affine_zero_count(&chart, coords - 1 - c, p, ctx);
    }
    Ok(total)
}

/// Points of a multiprojective variety (product of projective factors).
/// Uses fiber-solving when the model is a tower of `P^1` bundles over the
/// first factor, otherwise full chart enumeration.
pub fn count_multiprojective(
    blocks: &[usize],
    eqs: &[MultiPoly],
    p: u64,
    ctx: &CountCtx,
) -> Result<u128, CountError> {
    check_prime(p)?;
    count_multiprojective_inner(eqs, blocks, p, ctx)
}

fn validate_multihomogeneous(eqs: &[MultiPoly], blocks: &[usize]) -> Result<(), CountError> {
    let offsets: Vec<usize> = blocks
        .iter()
        .scan(0usize, |acc, &b| {
            let o = *acc;
            *acc += b;
            Some(o)
        })
        .collect();
    for (i, e) in eqs.iter().enumerate() {
        for (b, (&off, &len)) in offsets.iter().zip(blocks).enumerate() {
            let mut deg: Option<u32> = None;
            for (ex, _) in e.terms() {
                let d: u32 = ex[off..off + len].iter().map(|&x| x as u32).sum();
                match deg {
                    None => deg = Some(d),
                    Some(d0) if d0 != d => {
                        return Err(CountError::NotMultihomogeneous { eq_index: i, block: b })
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(())
}

fn count_multiprojective_inner(
    eqs: &[MultiPoly],
    blocks: &[usize],
    p: u64,
    ctx: &CountCtx,
) -> Result<u128, CountError> {
    validate_multihomogeneous(eqs, blocks)?;
    let fps: Vec<FpPoly> = eqs.iter().map(|e| e.reduce_mod_p(p)).collect::<Result<_, _>>()?;
    if let Some(shape) = fibered_shape(&fps, blocks) {
        return count_fibered(&fps, blocks, &shape, p, ctx, None);
    }
    multiproj_naive(&fps, blocks, p, ctx)
}

/// Chart-product enumeration; exact but exponential in the factor count.
fn multiproj_naive(
    fps: &[FpPoly],
    blocks: &[usize],
    p: u64,
    ctx: &CountCtx,
) -> Result<u128, CountError> {
    let total_budget: u128 = blocks
        .iter()
        .map(|&b| projective_space_size(p, b))
        .product();
    ctx.check_budget(total_budget)?;
    let nb = blocks.len();
    let mut chart = vec![0usize; nb];
    let mut total: u128 = 0;
    loop {
        // build the chart spec across all blocks
        let mut spec = Vec::new();
        for (b, &len) in blocks.iter().enumerate() {
            for l in 0..len {
                spec.push(if l < chart[b] {
                    VarSpec::Fixed(0)
                } else if l == chart[b] {
                    VarSpec::Fixed(1)
                } else {
                    VarSpec::Free
                });
            }
        }
        let k = spec.iter().filter(|s| matches!(s, VarSpec::Free)).count();
        let sp: Vec<FpPoly> = fps.iter().map(|f| specialize(f, &spec)).collect();
        total += affine_zero_count(&sp, k, p, ctx);
        // advance chart odometer
        let mut b = 0;
        loop {
            if b == nb {
                return Ok(total);
            }
            chart[b] += 1;
            if chart[b] < blocks[b] {
                break;
            }
            chart[b] = 0;
            b += 1;
        }
    }
}

/// Shape of a `P^1`-fiber tower: every non-base factor is a `P^1` tied to the
/// base by exactly one equation that is linear in that `P^1` and involves no
/// other factor.
struct FiberedShape {
    /// `(u_coefficient, v_coefficient)` as polynomials over the base block,
    /// one pair per fiber block in order.
    fiber_eqs: Vec<(FpPoly, FpPoly)>,
}

fn fibered_shape(fps: &[FpPoly], blocks: &[usize]) -> Option<FiberedShape> {
    if blocks.len() < 2 || fps.len() != blocks.len() - 1 {
        return None;
    }
    if blocks[1..].iter().any(|&b| b != 2) {
        return None;
    }
    let base = blocks[0];
    let mut fiber_eqs: Vec<Option<(FpPoly, FpPoly)>> = vec![None; blocks.len() - 1];
    for f in fps {
        let mut owner: Option<usize> = None;
        for (ex, _) in &f.terms {
            let tail_deg: u32 = ex[base..].iter().map(|&x| x as u32).sum();
            if tail_deg != 1 {
                return None;
            }
            let pos = ex[base..].iter().position(|&x| x > 0).unwrap();
            let fb = pos / 2;
            match owner {
                None => owner = Some(fb),
                Some(o) if o != fb => return None,
                _ => {}
            }
        }
        let fb = owner?;
        if fiber_eqs[fb].is_some() {
            return None;
        }
        // split into u- and v- coefficients over the base variables
        let p = f.p;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (ex, c) in &f.terms {
            let mut be = ex[..base].to_vec();
            be.truncate(base);
            let upos = base + 2 * fb;
            if ex[upos] == 1 {
                a.push((be, *c));
            } else {
                b.push((be, *c));
            }
        }
        fiber_eqs[fb] = Some((
            FpPoly { nvars: base, p, terms: a },
            FpPoly { nvars: base, p, terms: b },
        ));
    }
    let fiber_eqs: Option<Vec<_>> = fiber_eqs.into_iter().collect();
    Some(FiberedShape { fiber_eqs: fiber_eqs? })
}

/// Count a fibered model; when `branch` is given, count its double cover
/// instead (`sum (1 + chi(branch))` over the points, chi(0) = 0).
fn count_fibered(
    _fps: &[FpPoly],
    blocks: &[usize],
    shape: &FiberedShape,
    p: u64,
    ctx: &CountCtx,
    branch: Option<&FpPoly>,
) -> Result<u128, CountError> {
    let base = blocks[0];
    ctx.check_budget(projective_space_size(p, base))?;
    let chi = branch.map(|_| legendre_table(p));
    let max_exp = shape
        .fiber_eqs
        .iter()
        .flat_map(|(a, b)| a.terms.iter().chain(&b.terms))
        .chain(branch.into_iter().flat_map(|f| f.terms.iter()))
        .flat_map(|(ex, _)| ex.iter().copied())
        .max()
        .unwrap_or(1);
    let pows = power_table(p, max_exp);
    let mut total: i128 = 0;

    // enumerate base points chart by chart
    for c in 0..base {
        let k = base - 1 - c;
        ctx.record(pow_u128(p, k));
        let mut free = vec![0u64; k];
        loop {
            let mut y = vec![0u64; base];
            y[c] = 1;
            y[c + 1..].copy_from_slice(&free);
            // resolve each fiber: unique point or a full P^1
            let mut fibers: Vec<Option<(u64, u64)>> = Vec::with_capacity(shape.fiber_eqs.len());
            for (a, b) in &shape.fiber_eqs {
                let av = eval_with_pows(a, &y, &pows);
                let bv = eval_with_pows(b, &y, &pows);
                if av == 0 && bv == 0 {
                    fibers.push(None); // free fiber
                } else {
                    // solve u*av + v*bv = 0, normalized representative
                    let pt = if bv != 0 {
                        (1, (p - mul_mod_u64(av, inv_mod_u64(bv, p).unwrap(), p)) % p)
                    } else {
                        (0, 1)
                    };
                    fibers.push(Some(pt));
                }
            }
            match (&chi, branch) {
                (None, _) => {
                    let mut prod: u128 = 1;
                    for f in &fibers {
                        if f.is_none() {
                            prod *= (p + 1) as u128;
                        }
                    }
                    total += prod as i128;
                }
                (Some(chi), Some(br)) => {
                    // walk every concrete point of the fiber product
                    total += fiber_cover_sum(&y, &fibers, 0, br, chi, p, &pows, blocks);
                }
                _ => unreachable!(),
            }
            // advance
            let mut i = 0;
            loop {
                if i == k {
                    break;
                }
                free[i] += 1;
                if free[i] < p {
                    break;
                }
                free[i] = 0;
                i += 1;
            }
            if k == 0 || free.iter().all(|&x| x == 0) && {
                // detect wrap-around of the odometer
                let mut wrapped = true;
                for &x in &free {
                    if x != 0 {
                        wrapped = false;
                    }
                }
                wrapped && k > 0
            } {
                // for k == 0 run exactly once; for k > 0 stop on wrap
                break;
            }
        }
    }
    Ok(total as u128)
}

/// Sum `1 + chi(branch)` over all points in the fiber product above a fixed
/// base point. Fibers with `None` range over all of `P^1`.
#[allow(clippy::too_many_arguments)]
fn fiber_cover_sum(
    y: &[u64],
    fibers: &[Option<(u64, u64)>],
    idx: usize,
    branch: &FpPoly,
    chi: &[i8],
    p: u64,
    pows: &[Vec<u64>],
    blocks: &[usize],
) -> i128 {
    // accumulate coordinates base-first
    fn rec(
        coords: &mut Vec<u64>,
        fibers: &[Option<(u64, u64)>],
        idx: usize,
        branch: &FpPoly,
        chi: &[i8],
        p: u64,
        pows: &[Vec<u64>],
    ) -> i128 {
        if idx == fibers.len() {
            let v = eval_with_pows(branch, coords, pows);
            return 1 + chi[v as usize] as i128;
        }
        match fibers[idx] {
            Some((u, v)) => {
                coords.push(u);
                coords.push(v);
                let s = rec(coords, fibers, idx + 1, branch, chi, p, pows);
                coords.pop();
                coords.pop();
                s
            }
            None => {
                let mut s = 0i128;
                for t in 0..p {
                    coords.push(1);
                    coords.push(t);
                    s += rec(coords, fibers, idx + 1, branch, chi, p, pows);
                    coords.pop();
                    coords.pop();
                }
                coords.push(0);
                coords.push(1);
                s += rec(coords, fibers, idx + 1, branch, chi, p, pows);
                coords.pop();
                coords.pop();
                s
            }
        }
    }
    let _ = (idx, blocks);
    let mut coords = y.to_vec();
    rec(&mut coords, fibers, 0, branch, chi, p, pows)
}

/// Double cover of a multiprojective variety: `sum (1 + chi(branch))` over
/// its points, with the branch evaluated on normalized representatives.
fn count_multiproj_cover(
    eqs: &[MultiPoly],
    branch: &MultiPoly,
    blocks: &[usize],
    p: u64,
    ctx: &CountCtx,
) -> Result<u128, CountError> {
    validate_multihomogeneous(eqs, blocks)?;
    validate_multihomogeneous(std::slice::from_ref(branch), blocks)?;
    let fps: Vec<FpPoly> = eqs.iter().map(|e| e.reduce_mod_p(p)).collect::<Result<_, _>>()?;
    let br = branch.reduce_mod_p(p)?;
    if let Some(shape) = fibered_shape(&fps, blocks) {
        return count_fibered(&fps, blocks, &shape, p, ctx, Some(&br));
    }
    multiproj_cover_naive(&fps, &br, blocks, p, ctx)
}

/// Reference cover counter: walk every chart point, test the equations,
/// add `1 + chi(branch)`.
fn multiproj_cover_naive(
    fps: &[FpPoly],
    branch: &FpPoly,
    blocks: &[usize],
    p: u64,
    ctx: &CountCtx,
) -> Result<u128, CountError> {
    let total_budget: u128 = blocks.iter().map(|&b| projective_space_size(p, b)).product();
    ctx.check_budget(total_budget)?;
    let chi = legendre_table(p);
    let n: usize = blocks.iter().sum();
    let max_exp = fps
        .iter()
        .chain(std::iter::once(branch))
        .flat_map(|f| f.terms.iter())
        .flat_map(|(ex, _)| ex.iter().copied())
        .max()
        .unwrap_or(1);
    let pows = power_table(p, max_exp);
    let nb = blocks.len();
    let offsets: Vec<usize> = blocks
        .iter()
        .scan(0usize, |acc, &b| {
            let o = *acc;
            *acc += b;
            Some(o)
        })
        .collect();
    let mut chart = vec![0usize; nb];
    let mut total: i128 = 0;
    loop {
        // free variable positions for this chart combo
        let mut free_pos = Vec::new();
        let mut point = vec![0u64; n];
        for b in 0..nb {
            point[offsets[b] + chart[b]] = 1;
            for l in chart[b] + 1..blocks[b] {
                free_pos.push(offsets[b] + l);
            }
        }
        ctx.record(pow_u128(p, free_pos.len()));
        let mut vals = vec![0u64; free_pos.len()];
        loop {
            for (i, &pos) in free_pos.iter().enumerate() {
                point[pos] = vals[i];
            }
            if fps.iter().all(|f| eval_with_pows(f, &point, &pows) == 0) {
                let v = eval_with_pows(branch, &point, &pows);
                total += 1 + chi[v as usize] as i128;
            }
            let mut i = 0;
            loop {
                if i == vals.len() {
                    break;
                }
                vals[i] += 1;
                if vals[i] < p {
                    break;
                }
                vals[i] = 0;
                i += 1;
            }
            if vals.is_empty() || vals.iter().all(|&x| x == 0) {
                break;
            }
        }
        let mut b = 0;
        loop {
            if b == nb {
                return Ok(total as u128);
            }
            chart[b] += 1;
            if chart[b] < blocks[b] {
                break;
            }
            chart[b] = 0;
            b += 1;
        }
    }
}

/// Points of the double cover `t^2 = F` over `P^{coords-1}`, via the base
/// character sum: each base point contributes `1 + chi(F)` with `chi(0) = 0`.
pub fn count_weighted_double_cover(
    t_weight: u32,
    branch: &MultiPoly,
    p: u64,
    ctx: &CountCtx,
) -> Result<u128, CountError> {
    check_prime(p)?;
    count_weighted_double_cover_inner(t_weight, branch, branch.nvars(), p, ctx)
}

fn count_weighted_double_cover_inner(
    t_weight: u32,
    branch: &MultiPoly,
    coords: usize,
    p: u64,
    ctx: &CountCtx,
) -> Result<u128, CountError> {
    if branch.nvars() != coords {
        return Err(CountError::BadModel("branch arity does not match base".into()));
    }
    match branch.homogeneous_degree() {
        Some(d) if d == 2 * t_weight => {}
        _ => {
            return Err(CountError::BadModel(format!(
                "branch must be homogeneous of degree {}",
                2 * t_weight
            )))
        }
    }
    ctx.check_budget(projective_space_size(p, coords))?;
    let fp = branch.reduce_mod_p(p)?;
    let chi = legendre_table(p);
    let mut total: i128 = projective_space_size(p, coords) as i128;
    for c in 0..coords {
        let spec: Vec<VarSpec> = (0..coords)
            .map(|i| {
                if i < c {
                    VarSpec::Fixed(0)
                } else if i == c {
                    VarSpec::Fixed(1)
                } else {
                    VarSpec::Free
                }
            })
            .collect();
        let chart = specialize(&fp, &spec);
        total += affine_chi_sum(&chart, coords - 1 - c, p, &chi, ctx);
    }
    Ok(total as u128)
}

/// The mod-`p` point-count invariant of a graph: the affine zero count of
/// its spanning-tree polynomial is divisible by `p^2`; return
/// `(count / p^2) mod p`.
pub fn c2_bruteforce(g: &Graph, p: u64, ctx: &CountCtx) -> Result<u64, CountError> {
    check_prime(p)?;
    if g.vertex_count() < 3 {
        return Err(CountError::BadModel(
            "the quotient invariant needs at least 3 vertices".into(),
        ));
    }
    let psi = g.kirchhoff_polynomial()?;
    let n = psi.nvars();
    ctx.check_budget(pow_u128(p, n))?;
    let fp = psi.reduce_mod_p(p)?;
    let count = affine_zero_count(std::slice::from_ref(&fp), n, p, ctx);
    let p2 = (p as u128) * (p as u128);
    if count % p2 != 0 {
        return Err(CountError::DivisibilityFailure {
            label: g.name().unwrap_or("graph").to_string(),
            p,
            count,
        });
    }
    Ok(((count / p2) % p as u128) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_graph_fixture;
    use crate::poly::parse_poly;

    fn ctx() -> CountCtx {
        CountCtx::default()
    }

    fn mp(src: &str, vars: &[&str]) -> MultiPoly {
        parse_poly(src, vars).unwrap()
    }

    #[test]
    fn affine_plane_and_empty_system() {
        let f = mp("x0 + x1 + x2", &["x0", "x1", "x2"]);
        assert_eq!(count_affine(&[f], 5, &ctx()).unwrap(), 25);
        assert_eq!(count_affine(&[MultiPoly::zero(3)], 5, &ctx()).unwrap(), 125);
    }

    #[test]
    fn rejects_bad_primes() {
        let f = mp("x0", &["x0"]);
        assert!(matches!(
            count_affine(std::slice::from_ref(&f), 2, &ctx()),
            Err(CountError::EvenPrimeUnsupported)
        ));
        assert!(matches!(
            count_affine(&[f], 9, &ctx()),
            Err(CountError::NotPrime(9))
        ));
    }

    #[test]
    fn affine_count_k4_kirchhoff_divisible_by_p_squared() {
        let k4 = load_graph_fixture("K4").unwrap();
        let psi = k4.kirchhoff_polynomial().unwrap();
        let n = count_affine(&[psi], 3, &ctx()).unwrap();
        assert_eq!(n % 9, 0);
    }

    #[test]
    fn projective_space_sizes() {
        // P^3 over F_5, no constraints (zero equation)
        let z = MultiPoly::zero(4);
        assert_eq!(count_projective(&[z], 5, &ctx()).unwrap(), 156);
    }

    #[test]
    fn smooth_conic_has_p_plus_one_points() {
        let f = mp("x0*x1 - x2^2", &["x0", "x1", "x2"]);
        assert_eq!(count_projective(&[f], 7, &ctx()).unwrap(), 8);
    }

    #[test]
    fn hyperplane_count_chevalley_warning() {
        let f = mp("x0 + 3*x1 + x2", &["x0", "x1", "x2"]);
        for p in [3u64, 5, 7, 11] {
            let n = count_projective(std::slice::from_ref(&f), p, &ctx()).unwrap();
            assert_eq!(n, (p + 1) as u128);
            assert_eq!(n % p as u128, 1);
        }
    }

    #[test]
    fn projective_rejects_inhomogeneous() {
        let f = mp("x0^2 + x1", &["x0", "x1", "x2"]);
        assert!(matches!(
            count_projective(&[f], 5, &ctx()),
            Err(CountError::NotHomogeneous { eq_index: 0 })
        ));
    }

    #[test]
    fn affine_projective_relation_for_hypersurfaces() {
        // affine = (p-1) * projective + 1 for homogeneous hypersurfaces
        for src in ["x0*x1 - x2^2", "x0^3 + x1^3 + x2^3", "x0*x1*x2"] {
            let f = mp(src, &["x0", "x1", "x2"]);
            for p in [3u64, 5, 7] {
                let aff = count_affine(std::slice::from_ref(&f), p, &ctx()).unwrap();
                let proj = count_projective(std::slice::from_ref(&f), p, &ctx()).unwrap();
                assert_eq!(aff, (p as u128 - 1) * proj + 1, "{src} p={p}");
            }
        }
    }

    #[test]
    fn multiprojective_empty_product() {
        let z = MultiPoly::zero(4);
        // P^1 x P^1 over F_5: 36 points
        assert_eq!(
            count_multiprojective(&[2, 2], &[z], 5, &ctx()).unwrap(),
            36
        );
    }

    #[test]
    fn multiprojective_toy_divisor_naive_vs_fibered() {
        // u0*x0 - u1*x1 = 0 in P^1 x P^1 (blocks: x = block 0, u = block 1)
        let vars = ["x0", "x1", "u0", "u1"];
        let f = mp("u0*x0 - u1*x1", &vars);
        for p in [3u64, 5, 7, 11] {
            let fp = f.reduce_mod_p(p).unwrap();
            let naive = multiproj_naive(&[fp.clone()], &[2, 2], p, &ctx()).unwrap();
            let fib = count_multiprojective(&[2, 2], &[f.clone()], p, &ctx()).unwrap();
            assert_eq!(naive, fib, "p={p}");
            // the shape really is detected
            assert!(fibered_shape(&[fp], &[2, 2]).is_some());
        }
    }

    #[test]
    fn multiprojective_rejects_mixed_degrees() {
        let vars = ["x0", "x1", "u0", "u1"];
        let f = mp("u0*x0 - u1", &vars);
        assert!(matches!(
            count_multiprojective(&[2, 2], &[f], 5, &ctx()),
            Err(CountError::NotMultihomogeneous { .. })
        ));
    }

    #[test]
    fn blowup_of_p3_in_three_lines_count() {
        // base P^3 (y0..y3) with three P^1 fibers (ui:vi), each tying the
        // pencil through L = y0+y1+y3 and one of y0, y2, y3.
        let vars = [
            "y0", "y1", "y2", "y3", "u1", "v1", "u2", "v2", "u3", "v3",
        ];
        let l = "(y0 + y1 + y3)";
        let eqs = vec![
            mp(&format!("u1*{l} - v1*y0"), &vars),
            mp(&format!("u2*{l} - v2*y2"), &vars),
            mp(&format!("u3*{l} - v3*y3"), &vars),
        ];
        for p in [3u64, 5, 7] {
            let n = count_multiprojective(&[4, 2, 2, 2], &eqs, p, &ctx()).unwrap();
            let want = p * p * p + 7 * p * p + 4 * p + 1;
            assert_eq!(n, want as u128, "p={p}");
        }
        // the fibered path is actually exercised
        let fps: Vec<FpPoly> = eqs.iter().map(|e| e.reduce_mod_p(5).unwrap()).collect();
        assert!(fibered_shape(&fps, &[4, 2, 2, 2]).is_some());
        // and agrees with naive chart enumeration at p=3
        let fps3: Vec<FpPoly> = eqs.iter().map(|e| e.reduce_mod_p(3).unwrap()).collect();
        let naive = multiproj_naive(&fps3, &[4, 2, 2, 2], 3, &ctx()).unwrap();
        assert_eq!(naive, 3u128 * 9 + 7 * 9 + 12 + 1);
    }

    #[test]
    fn weighted_cover_split_and_twisted_quadric() {
        // t^2 = x0^2 over P^2: union of two planes glued along a line,
        // the character sum gives 2p + 1.
        let f = mp("x0^2", &["x0", "x1", "x2"]);
        assert_eq!(count_weighted_double_cover(1, &f, 5, &ctx()).unwrap(), 11);
        // twist by a non-residue: only the chi = -1 locus flips
        let g = mp("2*x0^2", &["x0", "x1", "x2"]);
        assert_eq!(count_weighted_double_cover(1, &g, 5, &ctx()).unwrap(), 1);
    }

    #[test]
    fn weighted_cover_matches_affine_orbit_oracle() {
        // The cover count equals (# nonzero affine solutions of t^2 = F)/(p-1).
        let cases = [
            ("x0^2", 1u32),
            ("x0*x1", 1),
            ("x0^2 + x1*x2", 1),
            ("x0^4 + x1^4 + x2^4", 2),
            ("x0^3*x1 - x2^4", 2),
        ];
        for (src, w) in cases {
            let f = mp(src, &["x0", "x1", "x2"]);
            for p in [3u64, 5, 7] {
                let cover = count_weighted_double_cover(w, &f, p, &ctx()).unwrap();
                // affine oracle over (t, x0, x1, x2)
                let fp = f.reduce_mod_p(p).unwrap();
                let mut affine = 0u128;
                for t in 0..p {
                    let mut pt = [0u64; 3];
                    loop {
                        let v = fp.eval(&pt);
                        let nonzero = t != 0 || pt.iter().any(|&x| x != 0);
                        if nonzero && (t * t) % p == v {
                            affine += 1;
                        }
                        let mut i = 0;
                        loop {
                            if i == 3 {
                                break;
                            }
                            pt[i] += 1;
                            if pt[i] < p {
                                break;
                            }
                            pt[i] = 0;
                            i += 1;
                        }
                        if pt.iter().all(|&x| x == 0) {
                            break;
                        }
                    }
                }
                assert_eq!(affine % (p as u128 - 1), 0, "{src} p={p}");
                assert_eq!(cover, affine / (p as u128 - 1), "{src} p={p}");
            }
        }
    }

    #[test]
    fn weighted_cover_validates_degree() {
        let f = mp("x0^3", &["x0", "x1", "x2"]);
        assert!(count_weighted_double_cover(1, &f, 5, &ctx()).is_err());
    }

    #[test]
    fn c2_c3_at_5() {
        let c3 = load_graph_fixture("C3").unwrap();
        assert_eq!(c2_bruteforce(&c3, 5, &ctx()).unwrap(), 1);
    }

    #[test]
    fn c2_rejects_tiny_graphs() {
        let g2 = crate::graph::Graph::new(2, vec![(1, 2)]).unwrap();
        assert!(matches!(
            c2_bruteforce(&g2, 5, &ctx()),
            Err(CountError::BadModel(_))
        ));
    }

    #[test]
    fn c2_divisibility_across_fixtures() {
        for name in ["C3", "C4", "C5", "K4"] {
            let g = load_graph_fixture(name).unwrap();
            for p in [3u64, 5, 7] {
                // Err would mean divisibility failed; the value itself is
                // checked against independent data elsewhere.
                let v = c2_bruteforce(&g, p, &ctx()).unwrap();
                assert!(v < p, "{name} p={p}");
            }
        }
    }

    #[test]
    fn budget_guard_fires() {
        let small = CountCtx::with_budget(100);
        let f = mp("x0 + x1 + x2 + x3", &["x0", "x1", "x2", "x3"]);
        assert!(matches!(
            count_affine(&[f], 7, &small),
            Err(CountError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn enumeration_counter_moves() {
        let c = ctx();
        let f = mp("x0 + x1", &["x0", "x1"]);
        assert_eq!(c.enumerated(), 0);
        count_affine(&[f], 5, &c).unwrap();
        assert!(c.enumerated() >= 25);
    }

    #[test]
    fn dispatch_through_count_target() {
        let conic = mp("x0*x1 - x2^2", &["x0", "x1", "x2"]);
        let t = CountTarget::projective(vec![conic]);
        assert_eq!(count(&t, 7, &ctx()).unwrap(), 8);
        let f = mp("x0^2", &["x0", "x1", "x2"]);
        let t = CountTarget::weighted_cover(1, f);
        assert_eq!(count(&t, 5, &ctx()).unwrap(), 11);
    }

    #[test]
    fn content_hash_is_stable_and_discriminating() {
        let a = CountTarget::projective(vec![mp("x0*x1 - x2^2", &["x0", "x1", "x2"])]);
        let b = CountTarget::projective(vec![mp("-x2^2 + x1*x0", &["x0", "x1", "x2"])]);
        let c = CountTarget::projective(vec![mp("x0*x1 + x2^2", &["x0", "x1", "x2"])]);
        assert_eq!(a.content_hash(), b.content_hash());
        assert_ne!(a.content_hash(), c.content_hash());
    }
}
