"""Numba kernels for the functional-pruning forward pass and decode.

The current cost function lives in flat arrays: piece i covers
[lo[i], lo[i+1]) (the last piece extends to +inf) with quadratic
(qa, qb, qc) and changepoint label lab.

The per-step update fuses the new-changepoint branch into a single
left-to-right sweep: in the unconstrained problem the branch is the constant
best-previous-cost + lam; in the constrained one it is the running minimum of
the rescaled cost + lam, which only needs the best value seen so far during
the sweep.

Storing every step's function can dwarf the sweep itself (constrained solves
near gamma -> 1 carry hundreds of pieces per step), so the store keeps one
checkpoint every `chk_every` steps and the backward pass re-derives the few
functions it visits by replaying from the nearest checkpoint.
"""

import numpy as np
from numba import njit

INF = np.inf
MERGE_TOL = 1e-12


@njit(cache=True)
def _grow(arr, need):
    if need <= arr.shape[0]:
        return arr
    n = arr.shape[0]
    while n < need:
        n *= 2
    out = np.empty(n, arr.dtype)
    out[: arr.shape[0]] = arr
    return out


@njit(cache=True)
def _piece_min(a, b, c, l, hi):
    """(argmin, value) of a quadratic on the closed interval [l, hi]."""
    if a > 0.0:
        v = -b / (2.0 * a)
        if v <= l:
            x = l
        elif v >= hi:
            x = hi
        else:
            x = v
    elif b > 0.0:
        x = l
    elif b < 0.0:
        x = hi
    else:
        x = l
    if x == INF:
        return x, -INF if b < 0.0 else c
    return x, (a * x + b) * x + c


@njit(cache=True)
def _min_function(lo, qa, qb, qc, lab, p, bound):
    """(label, argmin, value) of the function restricted to [lo[0], bound]."""
    best_lab = np.int64(-1)
    best_arg = 0.0
    best_val = INF
    for i in range(p):
        l = lo[i]
        r = lo[i + 1] if i + 1 < p else INF
        if l > bound:
            break
        hi = min(r, bound)
        if hi <= l:
            arg, val = l, (qa[i] * l + qb[i]) * l + qc[i]
        else:
            arg, val = _piece_min(qa[i], qb[i], qc[i], l, hi)
        if best_lab < 0:
            best_lab, best_arg, best_val = lab[i], arg, val
            continue
        tol = 1e-12 * max(1.0, abs(best_val))
        if val < best_val - tol or (val <= best_val + tol and lab[i] < best_lab):
            best_lab, best_arg, best_val = lab[i], arg, val
    return best_lab, best_arg, best_val


@njit(cache=True)
def _step(lo, qa, qb, qc, lab, p, nlo, na, nb, nc, nlab, ys, s, gamma, lam, rho, constrained):
    """One forward update. Mutates the current arrays (rescale + floor),
    writes min(current, new-changepoint branch) + residual into the n*
    scratch (which must hold at least 4*p + 8 pieces), and returns the new
    piece count. Branch pieces get label s.
    """
    g2 = gamma * gamma

    capval = INF
    if not constrained:
        best = INF
        for i in range(p):
            r = lo[i + 1] if i + 1 < p else INF
            _, v = _piece_min(qa[i], qb[i], qc[i], lo[i], r)
            if v < best:
                best = v
        capval = best + lam

    for i in range(p):
        lo[i] *= gamma
        qa[i] /= g2
        qb[i] /= gamma
    start = 0
    while start < p - 1 and lo[start + 1] <= rho:
        start += 1
    if start > 0:
        for i in range(start, p):
            lo[i - start] = lo[i]
            qa[i - start] = qa[i]
            qb[i - start] = qb[i]
            qc[i - start] = qc[i]
            lab[i - start] = lab[i]
        p -= start
    lo[0] = rho

    q = 0
    m = INF
    for i in range(p):
        l = lo[i]
        r = lo[i + 1] if i + 1 < p else INF
        ai = qa[i]
        bi = qb[i]
        ci = qc[i]
        li = lab[i]
        # monotone stretches of the piece: at most decreasing then increasing
        n_st = 1
        s0lo = l
        s0hi = r
        s1lo = 0.0
        s1hi = 0.0
        dec0 = False
        if ai > 0.0:
            v = -bi / (2.0 * ai)
            if v <= l:
                dec0 = False
            elif v >= r:
                dec0 = True
            else:
                n_st = 2
                s0hi = v
                dec0 = True
                s1lo = v
                s1hi = r
        elif bi < 0.0:
            dec0 = True
        for k in range(n_st):
            x0 = s0lo if k == 0 else s1lo
            x1 = s0hi if k == 0 else s1hi
            decreasing = dec0 if k == 0 else False
            v0 = (ai * x0 + bi) * x0 + ci
            if constrained:
                if v0 < m:
                    m = v0
                capval = m + lam
            # plan up to two emissions for the stretch: (position, is_cap)
            ne = 1
            e0_cap = False
            e1_x = 0.0
            e1_cap = False
            if decreasing:
                ev = (ai * x1 + bi) * x1 + ci if x1 != INF else -INF
                if v0 <= capval:
                    e0_cap = False
                elif ev >= capval:
                    e0_cap = True
                else:
                    if ai > 0.0:
                        vx = -bi / (2.0 * ai)
                        qv = ci - bi * bi / (4.0 * ai)
                        xcross = vx - np.sqrt(max(capval - qv, 0.0) / ai)
                    else:
                        xcross = (capval - ci) / bi
                    if xcross <= x0:
                        e0_cap = False
                    elif xcross >= x1:
                        e0_cap = True
                    else:
                        ne = 2
                        e0_cap = True
                        e1_x = xcross
                        e1_cap = False
                if constrained and ev < m:
                    m = ev
            else:
                if x1 == INF:
                    ev = INF if (ai > 0.0 or bi > 0.0) else ci
                else:
                    ev = (ai * x1 + bi) * x1 + ci
                if v0 > capval:
                    e0_cap = True
                elif ev <= capval:
                    e0_cap = False
                else:
                    if ai > 0.0:
                        vx = -bi / (2.0 * ai)
                        qv = ci - bi * bi / (4.0 * ai)
                        xcross = vx + np.sqrt(max(capval - qv, 0.0) / ai)
                    else:
                        xcross = (capval - ci) / bi
                    if xcross <= x0:
                        e0_cap = True
                    elif xcross >= x1:
                        e0_cap = False
                    else:
                        ne = 2
                        e0_cap = False
                        e1_x = xcross
                        e1_cap = True

            # emit, merging with the previous piece when quad and label match
            for e in range(ne):
                x = x0 if e == 0 else e1_x
                is_cap = e0_cap if e == 0 else e1_cap
                if is_cap:
                    ea = 0.0
                    eb = 0.0
                    ec = capval
                    el = s
                else:
                    ea = ai
                    eb = bi
                    ec = ci
                    el = li
                if q > 0 and nlab[q - 1] == el and abs(na[q - 1] - ea) <= MERGE_TOL and abs(nb[q - 1] - eb) <= MERGE_TOL and abs(nc[q - 1] - ec) <= MERGE_TOL:
                    continue
                if q > 0 and x <= nlo[q - 1]:
                    # zero-width predecessor from a clamped crossing: replace
                    na[q - 1] = ea
                    nb[q - 1] = eb
                    nc[q - 1] = ec
                    nlab[q - 1] = el
                    continue
                nlo[q] = x
                na[q] = ea
                nb[q] = eb
                nc[q] = ec
                nlab[q] = el
                q += 1

    hy = 0.5 * ys * ys
    for j in range(q):
        na[j] += 0.5
        nb[j] -= ys
        nc[j] += hy
    return q


@njit(cache=True)
def forward(y, gamma, lam, rho, constrained, chk_every):
    """Run the forward pass, checkpointing every `chk_every` steps.

    Returns (st_lo, st_a, st_b, st_c, st_lab, chk_steps, chk_offsets, nreg)
    where checkpoint j is the cost function of step chk_steps[j] stored in
    st_*[chk_offsets[j]:chk_offsets[j+1]] and nreg[s] counts the distinct
    changepoint labels alive at step s.
    """
    T = y.shape[0]
    cap = 256
    lo = np.empty(cap)
    qa = np.empty(cap)
    qb = np.empty(cap)
    qc = np.empty(cap)
    lab = np.empty(cap, np.int64)
    nlo = np.empty(cap)
    na = np.empty(cap)
    nb = np.empty(cap)
    nc = np.empty(cap)
    nlab = np.empty(cap, np.int64)

    nchk_max = (T + chk_every - 1) // chk_every + 2
    scap = 4096
    st_lo = np.empty(scap)
    st_a = np.empty(scap)
    st_b = np.empty(scap)
    st_c = np.empty(scap)
    st_lab = np.empty(scap, np.int64)
    chk_steps = np.empty(nchk_max, np.int64)
    chk_off = np.empty(nchk_max + 1, np.int64)
    chk_off[0] = 0
    nchk = 0
    scount = 0
    nreg = np.empty(T, np.int64)

    lo[0] = rho
    qa[0] = 0.5
    qb[0] = -y[0]
    qc[0] = 0.5 * y[0] * y[0]
    lab[0] = 0
    p = 1

    for s in range(T):
        if s > 0:
            need = 4 * p + 8
            if need > nlo.shape[0]:
                nlo = _grow(nlo, need)
                na = _grow(na, need)
                nb = _grow(nb, need)
                nc = _grow(nc, need)
                nlab = _grow(nlab, need)
            q = _step(lo, qa, qb, qc, lab, p, nlo, na, nb, nc, nlab,
                      y[s], s, gamma, lam, rho, constrained)
            tmp = lo
            lo = nlo
            nlo = tmp
            tmp = qa
            qa = na
            na = tmp
            tmp = qb
            qb = nb
            nb = tmp
            tmp = qc
            qc = nc
            nc = tmp
            tmpl = lab
            lab = nlab
            nlab = tmpl
            p = q
            if nlo.shape[0] < lo.shape[0]:
                nlo = _grow(nlo, lo.shape[0])
                na = _grow(na, lo.shape[0])
                nb = _grow(nb, lo.shape[0])
                nc = _grow(nc, lo.shape[0])
                nlab = _grow(nlab, lo.shape[0])

        labs = np.sort(lab[:p].copy())
        d = 1
        for i in range(1, p):
            if labs[i] != labs[i - 1]:
                d += 1
        nreg[s] = d

        if s % chk_every == 0 or s == T - 1:
            if scount + p > st_lo.shape[0]:
                st_lo = _grow(st_lo, scount + p)
                st_a = _grow(st_a, scount + p)
                st_b = _grow(st_b, scount + p)
                st_c = _grow(st_c, scount + p)
                st_lab = _grow(st_lab, scount + p)
            for i in range(p):
                st_lo[scount + i] = lo[i]
                st_a[scount + i] = qa[i]
                st_b[scount + i] = qb[i]
                st_c[scount + i] = qc[i]
                st_lab[scount + i] = lab[i]
            scount += p
            chk_steps[nchk] = s
            nchk += 1
            chk_off[nchk] = scount

    return (
        st_lo[:scount].copy(),
        st_a[:scount].copy(),
        st_b[:scount].copy(),
        st_c[:scount].copy(),
        st_lab[:scount].copy(),
        chk_steps[:nchk].copy(),
        chk_off[: nchk + 1].copy(),
        nreg,
    )


@njit(cache=True)
def _materialize(y, st_lo, st_a, st_b, st_c, st_lab, chk_steps, chk_off,
                 target, gamma, lam, rho, constrained):
    """Cost function of step `target`, replayed from the nearest checkpoint."""
    j = np.searchsorted(chk_steps, target, side="right") - 1
    o = chk_off[j]
    p = int(chk_off[j + 1] - o)
    cap = max(4 * p + 8, 256)
    lo = np.empty(cap)
    qa = np.empty(cap)
    qb = np.empty(cap)
    qc = np.empty(cap)
    lab = np.empty(cap, np.int64)
    nlo = np.empty(cap)
    na = np.empty(cap)
    nb = np.empty(cap)
    nc = np.empty(cap)
    nlab = np.empty(cap, np.int64)
    for i in range(p):
        lo[i] = st_lo[o + i]
        qa[i] = st_a[o + i]
        qb[i] = st_b[o + i]
        qc[i] = st_c[o + i]
        lab[i] = st_lab[o + i]
    for s in range(chk_steps[j] + 1, target + 1):
        need = 4 * p + 8
        if need > nlo.shape[0]:
            nlo = _grow(nlo, need)
            na = _grow(na, need)
            nb = _grow(nb, need)
            nc = _grow(nc, need)
            nlab = _grow(nlab, need)
        q = _step(lo, qa, qb, qc, lab, p, nlo, na, nb, nc, nlab,
                  y[s], s, gamma, lam, rho, constrained)
        tmp = lo
        lo = nlo
        nlo = tmp
        tmp = qa
        qa = na
        na = tmp
        tmp = qb
        qb = nb
        nb = tmp
        tmp = qc
        qc = nc
        nc = tmp
        tmpl = lab
        lab = nlab
        nlab = tmpl
        p = q
        if nlo.shape[0] < lo.shape[0]:
            nlo = _grow(nlo, lo.shape[0])
            na = _grow(na, lo.shape[0])
            nb = _grow(nb, lo.shape[0])
            nc = _grow(nc, lo.shape[0])
            nlab = _grow(nlab, lo.shape[0])
    return lo, qa, qb, qc, lab, p


@njit(cache=True)
def decode(y, st_lo, st_a, st_b, st_c, st_lab, chk_steps, chk_off,
           gamma, lam, rho, constrained):
    """Backtrack the stored/replayed cost functions into a calcium path.

    In the constrained problem each per-step minimization is restricted to
    calcium levels that keep the following decoded spike nonnegative.
    """
    T = y.shape[0]
    calcium = np.empty(T)
    cps = np.empty(T, np.int64)
    ncp = 0
    bound = INF
    s0 = T - 1
    objective = 0.0
    first = True
    while True:
        lo, qa, qb, qc, lab, p = _materialize(
            y, st_lo, st_a, st_b, st_c, st_lab, chk_steps, chk_off,
            s0, gamma, lam, rho, constrained,
        )
        lb, arg, val = _min_function(lo, qa, qb, qc, lab, p,
                                     bound if constrained else INF)
        if first:
            objective = val
            first = False
        calcium[s0] = arg
        t = s0 - 1
        while t >= lb:
            calcium[t] = calcium[t + 1] / gamma
            t -= 1
        if lb == 0:
            break
        cps[ncp] = lb
        ncp += 1
        bound = calcium[lb] / gamma
        s0 = lb - 1
    out = np.empty(ncp, np.int64)
    for i in range(ncp):
        out[i] = cps[ncp - 1 - i]
    return calcium, out, objective
