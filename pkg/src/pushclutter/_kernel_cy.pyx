# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation kernel.

Statement-by-statement transliteration of ``_kernel_py``; see that module
for the contract. Compiled with -ffp-contract=off so arithmetic stays
bit-identical to the interpreter's. Keep both files in lockstep.
"""

from libc.math cimport cos, fabs, floor, fmod, sin, sqrt, INFINITY, M_PI

BACKEND = "cython"

DISK = 0
BOX = 1

ROBOT_HITS_STATIC = 1
OBJECT_OUT_OF_BOUNDS = 2
UNRESOLVED_PENETRATION = 3

cdef int _DISK_C = 0
cdef int _BOX_C = 1
cdef double _TWO_PI = 2.0 * M_PI
cdef double _SUPPORT_EPS = 1e-12
cdef int _MAX_BODIES = 64


cdef inline double _norm_angle(double a):
    cdef double r = fmod(a, _TWO_PI)
    if r > M_PI:
        r -= _TWO_PI
    elif r <= -M_PI:
        r += _TWO_PI
    return r


def norm_angle(double a):
    """Reduce an angle to (-pi, pi]."""
    return _norm_angle(a)


cdef inline int _contact_disk_disk(double ax, double ay, double ar,
                                   double bx, double by, double br,
                                   double* out):
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double rsum = ar + br
    cdef double d2 = dx * dx + dy * dy
    cdef double d, nx, ny, depth
    if d2 >= rsum * rsum:
        return 0
    d = sqrt(d2)
    if d > 0.0:
        nx = dx / d
        ny = dy / d
    else:
        nx = 1.0
        ny = 0.0
    depth = rsum - d
    out[0] = depth
    out[1] = nx
    out[2] = ny
    out[3] = ax + nx * (ar - 0.5 * depth)
    out[4] = ay + ny * (ar - 0.5 * depth)
    return 1


cdef inline int _contact_disk_box(double ax, double ay, double ar,
                                  double bx, double by, double bth,
                                  double bhx, double bhy,
                                  double* out):
    cdef double c = cos(bth)
    cdef double s = sin(bth)
    cdef double wx = ax - bx
    cdef double wy = ay - by
    cdef double lx = c * wx + s * wy
    cdef double ly = -s * wx + c * wy
    cdef double qx, qy, ddx, ddy, d2, d, depth, nlx, nly, plx, ply
    cdef double exd, exs, eyd, eys
    qx = -bhx if lx < -bhx else (bhx if lx > bhx else lx)
    qy = -bhy if ly < -bhy else (bhy if ly > bhy else ly)
    if qx != lx or qy != ly:
        ddx = lx - qx
        ddy = ly - qy
        d2 = ddx * ddx + ddy * ddy
        if d2 >= ar * ar:
            return 0
        d = sqrt(d2)
        depth = ar - d
        nlx = -ddx / d
        nly = -ddy / d
        plx = 0.5 * (lx + ar * nlx + qx)
        ply = 0.5 * (ly + ar * nly + qy)
    else:
        if lx >= 0.0:
            exd = bhx - lx
            exs = 1.0
        else:
            exd = bhx + lx
            exs = -1.0
        if ly >= 0.0:
            eyd = bhy - ly
            eys = 1.0
        else:
            eyd = bhy + ly
            eys = -1.0
        if exd <= eyd:
            depth = exd + ar
            nlx = -exs
            nly = 0.0
            plx = exs * bhx
            ply = ly
        else:
            depth = eyd + ar
            nlx = 0.0
            nly = -eys
            plx = lx
            ply = eys * bhy
    out[0] = depth
    out[1] = c * nlx - s * nly
    out[2] = s * nlx + c * nly
    out[3] = bx + c * plx - s * ply
    out[4] = by + s * plx + c * ply
    return 1


cdef inline void _box_corners(double x, double y, double c, double s,
                              double hx, double hy,
                              double* xs, double* ys):
    cdef double ex = c * hx
    cdef double ey = s * hx
    cdef double fx = -s * hy
    cdef double fy = c * hy
    xs[0] = x + ex + fx
    xs[1] = x - ex + fx
    xs[2] = x - ex - fx
    xs[3] = x + ex - fx
    ys[0] = y + ey + fy
    ys[1] = y - ey + fy
    ys[2] = y - ey - fy
    ys[3] = y + ey - fy


cdef inline void _support(double* xs, double* ys, double nx, double ny,
                          double* ox, double* oy):
    cdef double best = xs[0] * nx + ys[0] * ny
    cdef double d, sx, sy
    cdef int i, cnt
    for i in range(1, 4):
        d = xs[i] * nx + ys[i] * ny
        if d > best:
            best = d
    sx = 0.0
    sy = 0.0
    cnt = 0
    for i in range(4):
        if xs[i] * nx + ys[i] * ny >= best - _SUPPORT_EPS:
            sx += xs[i]
            sy += ys[i]
            cnt += 1
    ox[0] = sx / cnt
    oy[0] = sy / cnt


cdef inline int _contact_box_box(double ax, double ay, double ath,
                                 double ahx, double ahy,
                                 double bx, double by, double bth,
                                 double bhx, double bhy,
                                 double* out):
    cdef double ca = cos(ath)
    cdef double sa = sin(ath)
    cdef double cb = cos(bth)
    cdef double sb = sin(bth)
    cdef double axs[4]
    cdef double ays[4]
    cdef double bxs[4]
    cdef double bys[4]
    cdef double best, bnx, bny, ux, uy, amin, amax, bmin, bmax, d, ov, dd
    cdef double push_pos, push_neg
    cdef double pax, pay, pbx, pby
    cdef int k, i
    _box_corners(ax, ay, ca, sa, ahx, ahy, axs, ays)
    _box_corners(bx, by, cb, sb, bhx, bhy, bxs, bys)
    best = INFINITY
    bnx = 0.0
    bny = 0.0
    for k in range(4):
        if k == 0:
            ux = ca
            uy = sa
        elif k == 1:
            ux = -sa
            uy = ca
        elif k == 2:
            ux = cb
            uy = sb
        else:
            ux = -sb
            uy = cb
        amin = axs[0] * ux + ays[0] * uy
        amax = amin
        for i in range(1, 4):
            d = axs[i] * ux + ays[i] * uy
            if d < amin:
                amin = d
            elif d > amax:
                amax = d
        bmin = bxs[0] * ux + bys[0] * uy
        bmax = bmin
        for i in range(1, 4):
            d = bxs[i] * ux + bys[i] * uy
            if d < bmin:
                bmin = d
            elif d > bmax:
                bmax = d
        # translation needed to push b clear along +u or -u; the plain
        # interval intersection would under-measure contained projections
        push_pos = amax - bmin
        push_neg = bmax - amin
        ov = push_pos if push_pos < push_neg else push_neg
        if ov <= 0.0:
            return 0
        if ov < best:
            best = ov
            bnx = ux
            bny = uy
    dd = (bx - ax) * bnx + (by - ay) * bny
    if dd < 0.0:
        bnx = -bnx
        bny = -bny
    _support(axs, ays, bnx, bny, &pax, &pay)
    _support(bxs, bys, -bnx, -bny, &pbx, &pby)
    out[0] = best
    out[1] = bnx
    out[2] = bny
    out[3] = 0.5 * (pax + pbx)
    out[4] = 0.5 * (pay + pby)
    return 1


cdef inline int _contact(int ta, double ax, double ay, double ath,
                         double ap0, double ap1,
                         int tb, double bx, double by, double bth,
                         double bp0, double bp1,
                         double* out):
    cdef int r
    if ta == _DISK_C:
        if tb == _DISK_C:
            return _contact_disk_disk(ax, ay, ap0, bx, by, bp0, out)
        return _contact_disk_box(ax, ay, ap0, bx, by, bth, bp0, bp1, out)
    if tb == _DISK_C:
        r = _contact_disk_box(bx, by, bp0, ax, ay, ath, ap0, ap1, out)
        if r == 0:
            return 0
        out[1] = -out[1]
        out[2] = -out[2]
        return 1
    return _contact_box_box(ax, ay, ath, ap0, ap1, bx, by, bth, bp0, bp1, out)


def contact(int ta, double ax, double ay, double ath, double ap0, double ap1,
            int tb, double bx, double by, double bth, double bp0, double bp1):
    """Narrow-phase contact; see the reference kernel for the contract."""
    cdef double out[5]
    if _contact(ta, ax, ay, ath, ap0, ap1, tb, bx, by, bth, bp0, bp1, out) == 0:
        return None
    return (out[0], out[1], out[2], out[3], out[4])


cdef inline void _apply_corr(int i, double ux, double uy, double share,
                             double px, double py,
                             double* lmx, double* lmy, double* lmt,
                             int* ltp, double* lrd,
                             unsigned char* touched, double kappa):
    cdef double lax, lay, cr
    if ltp[i] == _BOX_C and kappa != 0.0:
        lax = px - lmx[i]
        lay = py - lmy[i]
        cr = lrd[i]
        lmt[i] = _norm_angle(lmt[i] + kappa * (lax * uy - lay * ux) * share / (cr * cr))
    lmx[i] += share * ux
    lmy[i] += share * uy
    touched[i] = 1


def propagate(
    double rx, double ry, double rt,
    int rtype, double rp0, double rp1, double rrad,
    double[::1] mx, double[::1] my, double[::1] mt,
    int[::1] mtype, double[::1] mp0, double[::1] mp1, double[::1] mrad,
    unsigned char[::1] active,
    double[::1] sx, double[::1] sy, double[::1] st,
    int[::1] stype, double[::1] sp0, double[::1] sp1, double[::1] srad,
    double vx, double vy, double om, double duration,
    double dt, double tol_pen, double kappa, int max_iter,
    double wxmin, double wymin, double wxmax, double wymax,
    int robot_ghost,
):
    """Advance the system by one control; see the reference kernel."""
    cdef int n = mx.shape[0]
    cdef int ns = sx.shape[0]
    if n > _MAX_BODIES or ns > _MAX_BODIES:
        raise ValueError("body count exceeds kernel capacity")
    cdef double lmx[64]
    cdef double lmy[64]
    cdef double lmt[64]
    cdef int ltp[64]
    cdef double lp0[64]
    cdef double lp1[64]
    cdef double lrd[64]
    cdef int lac[64]
    cdef double lsx[64]
    cdef double lsy[64]
    cdef double lst[64]
    cdef int lstp[64]
    cdef double lsp0[64]
    cdef double lsp1[64]
    cdef double lsrd[64]
    cdef unsigned char touched[64]
    cdef unsigned char oob[64]
    cdef unsigned char unres[64]
    cdef double out[5]
    cdef int i, j, k, it
    cdef int steps_full, steps
    cdef double rem, h, dx, dy, rs, depth, nx, ny, px, py, half
    cdef int changed, clean, stop, hit_static

    for i in range(n):
        lmx[i] = mx[i]
        lmy[i] = my[i]
        lmt[i] = mt[i]
        ltp[i] = mtype[i]
        lp0[i] = mp0[i]
        lp1[i] = mp1[i]
        lrd[i] = mrad[i]
        lac[i] = active[i]
        touched[i] = 0
    for j in range(ns):
        lsx[j] = sx[j]
        lsy[j] = sy[j]
        lst[j] = st[j]
        lstp[j] = stype[j]
        lsp0[j] = sp0[j]
        lsp1[j] = sp1[j]
        lsrd[j] = srad[j]

    steps_full = <int> floor(duration / dt + 1e-9)
    rem = duration - steps_full * dt
    if rem > 1e-12:
        steps = steps_full + 1
    else:
        steps = steps_full
        rem = 0.0

    violations = []
    for k in range(steps):
        h = dt if k < steps_full else rem
        rx += vx * h
        ry += vy * h
        rt = _norm_angle(rt + om * h)
        clean = 0
        for it in range(max_iter):
            changed = 0
            if not robot_ghost:
                for i in range(n):
                    if not lac[i]:
                        continue
                    dx = lmx[i] - rx
                    dy = lmy[i] - ry
                    rs = rrad + lrd[i]
                    if dx * dx + dy * dy >= rs * rs:
                        continue
                    if _contact(rtype, rx, ry, rt, rp0, rp1,
                                ltp[i], lmx[i], lmy[i], lmt[i], lp0[i], lp1[i],
                                out) == 0:
                        continue
                    depth = out[0]
                    nx = out[1]
                    ny = out[2]
                    px = out[3]
                    py = out[4]
                    _apply_corr(i, nx, ny, depth, px, py,
                                lmx, lmy, lmt, ltp, lrd, touched, kappa)
                    changed = 1
            for i in range(n):
                if not lac[i]:
                    continue
                for j in range(i + 1, n):
                    if not lac[j]:
                        continue
                    dx = lmx[j] - lmx[i]
                    dy = lmy[j] - lmy[i]
                    rs = lrd[i] + lrd[j]
                    if dx * dx + dy * dy >= rs * rs:
                        continue
                    if _contact(ltp[i], lmx[i], lmy[i], lmt[i], lp0[i], lp1[i],
                                ltp[j], lmx[j], lmy[j], lmt[j], lp0[j], lp1[j],
                                out) == 0:
                        continue
                    depth = out[0]
                    nx = out[1]
                    ny = out[2]
                    px = out[3]
                    py = out[4]
                    half = 0.5 * depth
                    _apply_corr(i, -nx, -ny, half, px, py,
                                lmx, lmy, lmt, ltp, lrd, touched, kappa)
                    _apply_corr(j, nx, ny, half, px, py,
                                lmx, lmy, lmt, ltp, lrd, touched, kappa)
                    changed = 1
            for i in range(n):
                if not lac[i]:
                    continue
                for j in range(ns):
                    dx = lsx[j] - lmx[i]
                    dy = lsy[j] - lmy[i]
                    rs = lrd[i] + lsrd[j]
                    if dx * dx + dy * dy >= rs * rs:
                        continue
                    if _contact(ltp[i], lmx[i], lmy[i], lmt[i], lp0[i], lp1[i],
                                lstp[j], lsx[j], lsy[j], lst[j], lsp0[j], lsp1[j],
                                out) == 0:
                        continue
                    depth = out[0]
                    nx = out[1]
                    ny = out[2]
                    px = out[3]
                    py = out[4]
                    _apply_corr(i, -nx, -ny, depth, px, py,
                                lmx, lmy, lmt, ltp, lrd, touched, kappa)
                    changed = 1
            if not changed:
                clean = 1
                break

        stop = 0
        hit_static = 0
        for j in range(ns):
            dx = lsx[j] - rx
            dy = lsy[j] - ry
            rs = rrad + lsrd[j]
            if dx * dx + dy * dy >= rs * rs:
                continue
            if _contact(rtype, rx, ry, rt, rp0, rp1,
                        lstp[j], lsx[j], lsy[j], lst[j], lsp0[j], lsp1[j],
                        out) == 0:
                continue
            if out[0] > tol_pen:
                hit_static = 1
                break
        for i in range(n):
            oob[i] = 0
            if lac[i] and (lmx[i] < wxmin or lmx[i] > wxmax
                           or lmy[i] < wymin or lmy[i] > wymax):
                oob[i] = 1
        if clean:
            for i in range(n):
                unres[i] = 0
        else:
            for i in range(n):
                unres[i] = 0
            if not robot_ghost:
                for i in range(n):
                    if not lac[i]:
                        continue
                    dx = lmx[i] - rx
                    dy = lmy[i] - ry
                    rs = rrad + lrd[i]
                    if dx * dx + dy * dy >= rs * rs:
                        continue
                    if _contact(rtype, rx, ry, rt, rp0, rp1,
                                ltp[i], lmx[i], lmy[i], lmt[i], lp0[i], lp1[i],
                                out) == 0:
                        continue
                    if out[0] > tol_pen:
                        unres[i] = 1
            for i in range(n):
                if not lac[i]:
                    continue
                for j in range(i + 1, n):
                    if not lac[j]:
                        continue
                    dx = lmx[j] - lmx[i]
                    dy = lmy[j] - lmy[i]
                    rs = lrd[i] + lrd[j]
                    if dx * dx + dy * dy >= rs * rs:
                        continue
                    if _contact(ltp[i], lmx[i], lmy[i], lmt[i], lp0[i], lp1[i],
                                ltp[j], lmx[j], lmy[j], lmt[j], lp0[j], lp1[j],
                                out) == 0:
                        continue
                    if out[0] > tol_pen:
                        unres[i] = 1
                for j in range(ns):
                    dx = lsx[j] - lmx[i]
                    dy = lsy[j] - lmy[i]
                    rs = lrd[i] + lsrd[j]
                    if dx * dx + dy * dy >= rs * rs:
                        continue
                    if _contact(ltp[i], lmx[i], lmy[i], lmt[i], lp0[i], lp1[i],
                                lstp[j], lsx[j], lsy[j], lst[j], lsp0[j], lsp1[j],
                                out) == 0:
                        continue
                    if out[0] > tol_pen:
                        unres[i] = 1
        if hit_static:
            violations.append((ROBOT_HITS_STATIC, -1))
            stop = 1
        for i in range(n):
            if oob[i]:
                violations.append((OBJECT_OUT_OF_BOUNDS, i))
                stop = 1
        for i in range(n):
            if unres[i]:
                violations.append((UNRESOLVED_PENETRATION, i))
                stop = 1
        if stop:
            break

    for i in range(n):
        if touched[i]:
            mx[i] = lmx[i]
            my[i] = lmy[i]
            mt[i] = lmt[i]
    return rx, ry, rt, violations
