"""Pure numpy fallback for the compiled RK4 kernels.

Vectorized over the batch axis; one Python-level loop iteration per time
step.  Operation order mirrors ``_kernels.pyx``.
"""
import numpy as np

BLOWUP = 1e12


def _field(x, I, mu, m, r):
    w0 = x[:, 0] / I[0]
    w1 = x[:, 1] / I[1]
    w2 = x[:, 2] / I[2]
    n0 = x[:, 0] + mu[0]
    n1 = x[:, 1] + mu[1]
    n2 = x[:, 2] + mu[2]
    g0, g1, g2 = x[:, 3], x[:, 4], x[:, 5]
    out = np.empty_like(x)
    out[:, 0] = n1 * w2 - n2 * w1
    out[:, 1] = n2 * w0 - n0 * w2
    out[:, 2] = n0 * w1 - n1 * w0
    out[:, 3] = g1 * w2 - g2 * w1
    out[:, 4] = g2 * w0 - g0 * w2
    out[:, 5] = g0 * w1 - g1 * w0
    if m != 0.0:
        out[:, 0] = out[:, 0] + m * (g1 * r[2] - g2 * r[1])
        out[:, 1] = out[:, 1] + m * (g2 * r[0] - g0 * r[2])
        out[:, 2] = out[:, 2] + m * (g0 * r[1] - g1 * r[0])
    return out


@np.errstate(over="ignore", invalid="ignore")
def _step(x, h, I, mu, m, r):
    # blown-up rows may overflow; they are masked out by the callers
    hh = 0.5 * h
    h6 = h / 6.0
    k1 = _field(x, I, mu, m, r)
    k2 = _field(x + hh * k1, I, mu, m, r)
    k3 = _field(x + hh * k2, I, mu, m, r)
    k4 = _field(x + h * k3, I, mu, m, r)
    return x + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@np.errstate(over="ignore", invalid="ignore")
def _ok(x):
    nrm = np.sqrt(np.sum(x * x, axis=1))
    return np.isfinite(nrm) & (nrm <= BLOWUP)


def rk4_gyrostat(x0s, inertia, mu, m, r_G, h, nsteps, stride=1):
    x = np.array(x0s, dtype=float)
    N = x.shape[0]
    nsave = nsteps // stride + 1
    out = np.full((N, nsave, 6), np.nan)
    out[:, 0] = x
    nvalid = np.ones(N, dtype=np.intp)
    alive = np.ones(N, dtype=bool)
    s = 1
    for n in range(1, nsteps + 1):
        x = _step(x, h, inertia, mu, m, r_G)
        alive &= _ok(x)
        if not alive.any():
            break
        if n % stride == 0:
            out[alive, s] = x[alive]
            nvalid[alive] = s + 1
            s += 1
    return out, nvalid


def rk4_max_deviation(x0s, inertia, mu, m, r_G, h, nsteps, xe):
    x = np.array(x0s, dtype=float)
    xe = np.asarray(xe, dtype=float)
    N = x.shape[0]
    dev = np.zeros((N, 3))
    blown = np.zeros(N, dtype=bool)

    def record(x, live):
        d = x - xe
        dm = np.sum(d[:, :3] * d[:, :3], axis=1)
        dg = np.sum(d[:, 3:] * d[:, 3:], axis=1)
        cur = np.stack([np.sqrt(dm), np.sqrt(dg), np.sqrt(dm + dg)], axis=1)
        dev[live] = np.maximum(dev[live], cur[live])

    record(x, ~blown)
    for _ in range(nsteps):
        x = _step(x, h, inertia, mu, m, r_G)
        newly = ~blown & ~_ok(x)
        if newly.any():
            blown |= newly
            dev[newly] = BLOWUP
            x[blown] = xe
        if blown.all():
            break
        record(x, ~blown)
    return dev, blown
