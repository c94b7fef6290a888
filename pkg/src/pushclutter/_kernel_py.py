"""Pure-Python propagation kernel.

Reference implementation of the contact narrow phase and the quasi-static
substep loop. The compiled twin (``_kernel_cy.pyx``) transliterates this file
statement by statement; any edit here must be mirrored there. The two
backends must produce bit-identical floats (enforced by the parity tests),
which is why every formula below avoids fused or reassociated arithmetic:
plain ``sqrt(dx*dx + dy*dy)``, never ``hypot``.
"""

import math

BACKEND = "python"

DISK = 0
BOX = 1

# violation kinds, reported in this order
ROBOT_HITS_STATIC = 1
OBJECT_OUT_OF_BOUNDS = 2
UNRESOLVED_PENETRATION = 3

_TWO_PI = 2.0 * math.pi
_SUPPORT_EPS = 1e-12


def norm_angle(a):
    """Reduce an angle to (-pi, pi]."""
    r = math.fmod(a, _TWO_PI)
    if r > math.pi:
        r -= _TWO_PI
    elif r <= -math.pi:
        r += _TWO_PI
    return r


def contact_disk_disk(ax, ay, ar, bx, by, br):
    dx = bx - ax
    dy = by - ay
    rsum = ar + br
    d2 = dx * dx + dy * dy
    if d2 >= rsum * rsum:
        return None
    d = math.sqrt(d2)
    if d > 0.0:
        nx = dx / d
        ny = dy / d
    else:
        # concentric: direction is arbitrary, +x keeps it deterministic
        nx = 1.0
        ny = 0.0
    depth = rsum - d
    px = ax + nx * (ar - 0.5 * depth)
    py = ay + ny * (ar - 0.5 * depth)
    return (depth, nx, ny, px, py)


def contact_disk_box(ax, ay, ar, bx, by, bth, bhx, bhy):
    # disk a against box b; normal points from a to b
    c = math.cos(bth)
    s = math.sin(bth)
    wx = ax - bx
    wy = ay - by
    lx = c * wx + s * wy
    ly = -s * wx + c * wy
    qx = -bhx if lx < -bhx else (bhx if lx > bhx else lx)
    qy = -bhy if ly < -bhy else (bhy if ly > bhy else ly)
    if qx != lx or qy != ly:
        # center outside the box: clamp gives the closest surface point
        ddx = lx - qx
        ddy = ly - qy
        d2 = ddx * ddx + ddy * ddy
        if d2 >= ar * ar:
            return None
        d = math.sqrt(d2)
        depth = ar - d
        nlx = -ddx / d
        nly = -ddy / d
        plx = 0.5 * (lx + ar * nlx + qx)
        ply = 0.5 * (ly + ar * nly + qy)
    else:
        # center inside: exit along the cheaper axis, ties prefer x,
        # zero coordinate exits toward the positive side
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
    nx = c * nlx - s * nly
    ny = s * nlx + c * nly
    px = bx + c * plx - s * ply
    py = by + s * plx + c * ply
    return (depth, nx, ny, px, py)


def _box_corners(x, y, c, s, hx, hy):
    ex = c * hx
    ey = s * hx
    fx = -s * hy
    fy = c * hy
    return (
        [x + ex + fx, x - ex + fx, x - ex - fx, x + ex - fx],
        [y + ey + fy, y - ey + fy, y - ey - fy, y + ey - fy],
    )


def _support(xs, ys, nx, ny):
    # average of the extreme corners along n (within 1e-12 of the maximum)
    best = xs[0] * nx + ys[0] * ny
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
    return sx / cnt, sy / cnt


def contact_box_box(ax, ay, ath, ahx, ahy, bx, by, bth, bhx, bhy):
    ca = math.cos(ath)
    sa = math.sin(ath)
    cb = math.cos(bth)
    sb = math.sin(bth)
    axs, ays = _box_corners(ax, ay, ca, sa, ahx, ahy)
    bxs, bys = _box_corners(bx, by, cb, sb, bhx, bhy)
    best = math.inf
    bnx = 0.0
    bny = 0.0
    # separating-axis scan in fixed order (a.x, a.y, b.x, b.y); strict <
    # keeps the earliest minimal axis, which breaks exact ties toward x
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
            return None
        if ov < best:
            best = ov
            bnx = ux
            bny = uy
    dd = (bx - ax) * bnx + (by - ay) * bny
    if dd < 0.0:
        bnx = -bnx
        bny = -bny
    pax, pay = _support(axs, ays, bnx, bny)
    pbx, pby = _support(bxs, bys, -bnx, -bny)
    return (best, bnx, bny, 0.5 * (pax + pbx), 0.5 * (pay + pby))


def contact(ta, ax, ay, ath, ap0, ap1, tb, bx, by, bth, bp0, bp1):
    """Narrow-phase contact between two posed shapes.

    Shape params: (p0, p1) = (radius, unused) for disks, half extents for
    boxes. Returns None or (depth, nx, ny, px, py) with the normal pointing
    from a to b.
    """
    if ta == DISK:
        if tb == DISK:
            return contact_disk_disk(ax, ay, ap0, bx, by, bp0)
        return contact_disk_box(ax, ay, ap0, bx, by, bth, bp0, bp1)
    if tb == DISK:
        r = contact_disk_box(bx, by, bp0, ax, ay, ath, ap0, ap1)
        if r is None:
            return None
        depth, nx, ny, px, py = r
        return (depth, -nx, -ny, px, py)
    return contact_box_box(ax, ay, ath, ap0, ap1, bx, by, bth, bp0, bp1)


def propagate(
    rx, ry, rt,
    rtype, rp0, rp1, rrad,
    mx, my, mt,
    mtype, mp0, mp1, mrad,
    active,
    sx, sy, st,
    stype, sp0, sp1, srad,
    vx, vy, om, duration,
    dt, tol_pen, kappa, max_iter,
    wxmin, wymin, wxmax, wymax,
    robot_ghost,
):
    """Advance the system by one control.

    mx/my/mt are written in place, touched slots only. Returns
    (rx, ry, rt, violations) where violations is a list of (kind, body)
    tuples, body being the movable index or -1 for the robot. A violating
    substep ends the integration; the returned state is the state at the
    end of that substep.
    """
    n = len(mx)
    ns = len(sx)
    lmx = [float(v) for v in mx]
    lmy = [float(v) for v in my]
    lmt = [float(v) for v in mt]
    ltp = [int(v) for v in mtype]
    lp0 = [float(v) for v in mp0]
    lp1 = [float(v) for v in mp1]
    lrd = [float(v) for v in mrad]
    lac = [int(v) for v in active]
    lsx = [float(v) for v in sx]
    lsy = [float(v) for v in sy]
    lst = [float(v) for v in st]
    lstp = [int(v) for v in stype]
    lsp0 = [float(v) for v in sp0]
    lsp1 = [float(v) for v in sp1]
    lsrd = [float(v) for v in srad]
    touched = [False] * n
    oob = [False] * n
    unres = [False] * n

    def apply_corr(i, ux, uy, share, px, py):
        # rotation from the pre-move lever arm, boxes only
        if ltp[i] == BOX and kappa != 0.0:
            lax = px - lmx[i]
            lay = py - lmy[i]
            cr = lrd[i]
            lmt[i] = norm_angle(lmt[i] + kappa * (lax * uy - lay * ux) * share / (cr * cr))
        lmx[i] += share * ux
        lmy[i] += share * uy
        touched[i] = True

    steps_full = int(math.floor(duration / dt + 1e-9))
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
        rt = norm_angle(rt + om * h)
        clean = False
        for _ in range(max_iter):
            changed = False
            if not robot_ghost:
                for i in range(n):
                    if not lac[i]:
                        continue
                    dx = lmx[i] - rx
                    dy = lmy[i] - ry
                    rs = rrad + lrd[i]
                    if dx * dx + dy * dy >= rs * rs:
                        continue
                    c = contact(rtype, rx, ry, rt, rp0, rp1,
                                ltp[i], lmx[i], lmy[i], lmt[i], lp0[i], lp1[i])
                    if c is None:
                        continue
                    depth, nx, ny, px, py = c
                    apply_corr(i, nx, ny, depth, px, py)
                    changed = True
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
                    c = contact(ltp[i], lmx[i], lmy[i], lmt[i], lp0[i], lp1[i],
                                ltp[j], lmx[j], lmy[j], lmt[j], lp0[j], lp1[j])
                    if c is None:
                        continue
                    depth, nx, ny, px, py = c
                    half = 0.5 * depth
                    apply_corr(i, -nx, -ny, half, px, py)
                    apply_corr(j, nx, ny, half, px, py)
                    changed = True
            for i in range(n):
                if not lac[i]:
                    continue
                for j in range(ns):
                    dx = lsx[j] - lmx[i]
                    dy = lsy[j] - lmy[i]
                    rs = lrd[i] + lsrd[j]
                    if dx * dx + dy * dy >= rs * rs:
                        continue
                    c = contact(ltp[i], lmx[i], lmy[i], lmt[i], lp0[i], lp1[i],
                                lstp[j], lsx[j], lsy[j], lst[j], lsp0[j], lsp1[j])
                    if c is None:
                        continue
                    depth, nx, ny, px, py = c
                    apply_corr(i, -nx, -ny, depth, px, py)
                    changed = True
            if not changed:
                clean = True
                break

        stop = False
        hit_static = False
        for j in range(ns):
            dx = lsx[j] - rx
            dy = lsy[j] - ry
            rs = rrad + lsrd[j]
            if dx * dx + dy * dy >= rs * rs:
                continue
            c = contact(rtype, rx, ry, rt, rp0, rp1,
                        lstp[j], lsx[j], lsy[j], lst[j], lsp0[j], lsp1[j])
            if c is not None and c[0] > tol_pen:
                hit_static = True
                break
        for i in range(n):
            oob[i] = False
            if lac[i] and (lmx[i] < wxmin or lmx[i] > wxmax
                           or lmy[i] < wymin or lmy[i] > wymax):
                oob[i] = True
        if clean:
            for i in range(n):
                unres[i] = False
        else:
            # the projection gave up: rescan every pair class it resolves
            for i in range(n):
                unres[i] = False
            if not robot_ghost:
                for i in range(n):
                    if not lac[i]:
                        continue
                    dx = lmx[i] - rx
                    dy = lmy[i] - ry
                    rs = rrad + lrd[i]
                    if dx * dx + dy * dy >= rs * rs:
                        continue
                    c = contact(rtype, rx, ry, rt, rp0, rp1,
                                ltp[i], lmx[i], lmy[i], lmt[i], lp0[i], lp1[i])
                    if c is not None and c[0] > tol_pen:
                        unres[i] = True
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
                    c = contact(ltp[i], lmx[i], lmy[i], lmt[i], lp0[i], lp1[i],
                                ltp[j], lmx[j], lmy[j], lmt[j], lp0[j], lp1[j])
                    if c is not None and c[0] > tol_pen:
                        unres[i] = True
                for j in range(ns):
                    dx = lsx[j] - lmx[i]
                    dy = lsy[j] - lmy[i]
                    rs = lrd[i] + lsrd[j]
                    if dx * dx + dy * dy >= rs * rs:
                        continue
                    c = contact(ltp[i], lmx[i], lmy[i], lmt[i], lp0[i], lp1[i],
                                lstp[j], lsx[j], lsy[j], lst[j], lsp0[j], lsp1[j])
                    if c is not None and c[0] > tol_pen:
                        unres[i] = True
        if hit_static:
            violations.append((ROBOT_HITS_STATIC, -1))
            stop = True
        for i in range(n):
            if oob[i]:
                violations.append((OBJECT_OUT_OF_BOUNDS, i))
                stop = True
        for i in range(n):
            if unres[i]:
                violations.append((UNRESOLVED_PENETRATION, i))
                stop = True
        if stop:
            break

    for i in range(n):
        if touched[i]:
            mx[i] = lmx[i]
            my[i] = lmy[i]
            mt[i] = lmt[i]
    return rx, ry, rt, violations
