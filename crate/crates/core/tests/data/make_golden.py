"""Regenerate golden_kernels.txt with an independent numpy evaluation.

    python3 make_golden.py > golden_kernels.txt

Free space: closed form evaluated in mpmath at 30 digits. Image sum: explicit
image matrices, Gaussian radial damping on six lengths 170 / 2^(j/4),
Vandermonde extrapolation to zero damping. Mode sum and the radiative
self-term part: scalar eigenfunction expansion with direct loops.
"""
import mpmath as mp
import numpy as np

mp.mp.dps = 30
LADDER = [170.0 / 2 ** (j / 4) for j in range(6)]


def g0_mp(d, k=1):
    x, y, z = (mp.mpf(v) for v in d)
    r = mp.sqrt(x * x + y * y + z * z)
    u = [x / r, y / r, z / r]
    t = k * r
    e = mp.exp(1j * t) / t
    A = 1 + 1j / t - 1 / t**2
    B = -1 - 3j / t + 3 / t**2
    return [[complex(1.5 * e * ((A if i == j else 0) + B * u[i] * u[j])) for j in range(3)] for i in range(3)]


def g0(d, k=1.0):
    R = np.linalg.norm(d, axis=-1)
    u = d / R[..., None]
    t = k * R
    e = np.exp(1j * t) / t
    A = 1 + 1j / t - 1 / t**2
    B = -1 - 3j / t + 3 / t**2
    return 1.5 * e[..., None, None] * (A[..., None, None] * np.eye(3) + B[..., None, None] * u[..., :, None] * u[..., None, :])


def damped_images(r, rp, a, b, exclude_identity, trunc=5.0):
    rmax = trunc * LADDER[0]
    P = int(np.ceil(rmax / (2 * a))) + 2
    Q = int(np.ceil(rmax / (2 * b))) + 2
    p = np.arange(-P, P + 1)[:, None]
    q = np.arange(-Q, Q + 1)[None, :]
    out = [np.zeros((3, 3), complex) for _ in LADDER]
    for sx in (1, -1):
        for sy in (1, -1):
            mx = np.diag([1.0, -1.0, -1.0]) if sx < 0 else np.eye(3)
            my = np.diag([-1.0, 1.0, -1.0]) if sy < 0 else np.eye(3)
            S = mx @ my
            dx = r[0] - (2 * p * a + sx * rp[0]) + 0 * q
            dy = r[1] - (2 * q * b + sy * rp[1]) + 0 * p
            rho2 = dx**2 + dy**2
            mask = rho2 <= rmax**2
            if exclude_identity and sx == 1 and sy == 1:
                mask &= ~((p == 0) & (q == 0))
            d = np.stack([dx[mask], dy[mask], np.full(mask.sum(), r[2] - rp[2])], -1)
            G = g0(d) @ S
            for i, L in enumerate(LADDER):
                w = np.exp(-rho2[mask] / L**2)
                out[i] += np.tensordot(w, G, axes=(0, 0))
    h = np.array([1.0 / L**2 for L in LADDER])
    V = np.vander(h, len(h), increasing=True)
    coef = np.linalg.solve(V, np.array([v.ravel() for v in out]))
    return coef[0].reshape(3, 3)


def mode_sum(r, rp, a, b, k=1.0, radiative_only=False, thr=1e-18):
    dz = r[2] - rp[2]
    s = np.sign(dz)
    adz = abs(dz)
    G = np.zeros((3, 3), complex)
    kappa_max = np.log(1 / thr) / adz if adz > 0 else 0.0
    kt_max = np.sqrt(k**2 + kappa_max**2) + 1
    M = int(kt_max * a / np.pi) + 2
    N = int(kt_max * b / np.pi) + 2
    x, y = r[0], r[1]
    xp, yp = rp[0], rp[1]
    for m in range(M + 1):
        km = m * np.pi / a
        for n in range(N + 1):
            kn = n * np.pi / b
            kc2 = km**2 + kn**2
            if radiative_only and kc2 >= k**2:
                continue
            kz = np.sqrt(complex(k**2 - kc2))
            if kz.imag < 0:
                kz = -kz
            if kz.imag > kappa_max:
                continue
            PE = 1j / (2 * kz) * np.exp(1j * kz * adz)
            em = 1 if m == 0 else 2
            en = 1 if n == 0 else 2
            if n >= 1:
                Nx = em * 2 / (a * b)
                px = np.cos(km * x) * np.sin(kn * y)
                pxp = np.cos(km * xp) * np.sin(kn * yp)
                G[0, 0] += Nx * pxp * (px - km**2 * px / k**2) * PE
                G[1, 0] += Nx * pxp * (-km * kn * np.sin(km * x) * np.cos(kn * y)) / k**2 * PE
                G[2, 0] += Nx * pxp * (1j * kz * s * (-km * np.sin(km * x) * np.sin(kn * y))) / k**2 * PE
            if m >= 1:
                Ny = en * 2 / (a * b)
                py = np.sin(km * x) * np.cos(kn * y)
                pyp = np.sin(km * xp) * np.cos(kn * yp)
                G[1, 1] += Ny * pyp * (py - kn**2 * py / k**2) * PE
                G[0, 1] += Ny * pyp * (-km * kn * np.cos(km * x) * np.sin(kn * y)) / k**2 * PE
                G[2, 1] += Ny * pyp * (1j * kz * s * (-kn * np.sin(km * x) * np.sin(kn * y))) / k**2 * PE
            if m >= 1 and n >= 1:
                Nz = 4 / (a * b)
                pz = np.sin(km * x) * np.sin(kn * y)
                pzp = np.sin(km * xp) * np.sin(kn * yp)
                G[2, 2] += Nz * pzp * pz * (kc2 / k**2) * PE
                G[0, 2] += Nz * pzp * (1j * kz * s * km * np.cos(km * x) * np.sin(kn * y)) / k**2 * PE
                G[1, 2] += Nz * pzp * (1j * kz * s * kn * np.sin(km * x) * np.cos(kn * y)) / k**2 * PE
    return 6 * np.pi / k * G


def record(kind, a, b, r, rp, T):
    T = np.asarray(T, complex)
    nums = [a, b, 1.0, *r, *rp] + [v for z in T.ravel() for v in (z.real, z.imag)]
    return kind + " " + " ".join(f"{v:.16e}" for v in nums)


def main():
    print("# wgcdm-golden v1")
    print("# kind a b k x y z xp yp zp then the tensor row-major as re im pairs")
    for d in [(0.0, 0.0, 2.0), (0.3, -1.2, 0.7), (5.0, 1.0, -3.0)]:
        print(record("freespace", 1.0, 1.0, d, (0.0, 0.0, 0.0), g0_mp(d)))
    for a, b, r, rp in [
        (4.0, 2.0, (1.3, 0.7, 0.0), (2.6, 1.4, 0.5)),
        (4.0, 2.0, (0.4, 1.8, 1.0), (3.1, 0.3, -1.5)),
        (8.0, 8.0, (2.5, 5.5, 0.0), (6.0, 1.7, 2.0)),
    ]:
        print(record("imagesum", a, b, r, rp, damped_images(np.array(r), np.array(rp), a, b, False)))
    for a, b, r, rp in [
        (4.0, 2.0, (1.3, 0.7, 0.0), (2.6, 1.4, 5.0)),
        (4.0, 2.0, (2.0, 1.0, 20.0), (0.9, 0.2, 0.0)),
        (8.0, 8.0, (2.5, 5.5, 0.0), (6.0, 1.7, 4.0)),
    ]:
        print(record("modesum", a, b, r, rp, mode_sum(np.array(r), np.array(rp), a, b)))
    for a, b, r in [(4.0, 2.0, (1.3, 0.7, 0.0)), (8.0, 8.0, (3.7, 4.4, 0.0))]:
        rv = np.array(r)
        shift = damped_images(rv, rv, a, b, True)
        rad = mode_sum(rv, rv, a, b, radiative_only=True)
        print(record("self", a, b, r, r, shift.real + 1j * rad.imag))


if __name__ == "__main__":
    main()
