"""Flat scalar kernels for 2x2 and 3x3 complex Hermitian algebra.

The propagation loops run millions of tiny-matrix operations; building numpy
arrays for each of them dominates the runtime.  These kernels therefore work
on plain tuples of Python complex scalars (row-major for matrices) and only
touch numpy at module boundaries.

Conventions
-----------
* A Hermitian matrix is passed as its real diagonal plus the upper triangle:
  2x2 -> (d0, d1, u01), 3x3 -> (d0, d1, d2, u01, u02, u12).
* A general matrix is a flat row-major tuple of 4 or 9 complex numbers.
* Eigen kernels return (eigenvalues tuple, V flat) with V's k-th column the
  k-th eigenvector; eigenvalues are NOT sorted here (the public wrapper in
  `linalg` sorts and fixes phases).
"""

import cmath
import math

# ---------------------------------------------------------------------------
# 2x2 Hermitian eigendecomposition (closed form)
# ---------------------------------------------------------------------------


def eig2(d0, d1, u01):
    """Closed-form eigendecomposition of [[d0, u01], [conj(u01), d1]].

    Returns eigenvalues ascending and an orthonormal V (flat 2x2).
    """
    if u01 == 0j:
        if d0 <= d1:
            return (d0, d1), (1 + 0j, 0j, 0j, 1 + 0j)
        return (d1, d0), (0j, 1 + 0j, 1 + 0j, 0j)
    half_sum = 0.5 * (d0 + d1)
    half_diff = 0.5 * (d0 - d1)
    b = abs(u01)
    rad = math.hypot(half_diff, b)
    lo = half_sum - rad
    hi = half_sum + rad
    # Stable eigenvector for `lo`: pick the residual row with the larger pivot.
    if half_diff >= 0.0:
        # d0 - lo = half_diff + rad is the large pivot
        v0 = -u01
        v1 = complex(half_diff + rad)
    else:
        v0 = complex(rad - half_diff)
        v1 = -u01.conjugate()
    n = math.hypot(abs(v0), abs(v1))
    v0 /= n
    v1 /= n
    # Orthogonal partner for `hi`.
    w0 = -v1.conjugate()
    w1 = v0.conjugate()
    return (lo, hi), (v0, w0, v1, w1)


# ---------------------------------------------------------------------------
# 3x3 Hermitian eigendecomposition (cyclic Jacobi)
# ---------------------------------------------------------------------------


def eig3(d0, d1, d2, u01, u02, u12, tol=1e-15, max_sweeps=24):
    """Cyclic Jacobi sweeps on a 3x3 Hermitian matrix, to machine precision.

    Off-diagonal mass is annihilated pairwise with complex Givens rotations
    until it drops below ``tol`` times the Frobenius norm.  Quadratic
    convergence makes 3-6 sweeps typical.
    """
    a00 = float(d0)
    a11 = float(d1)
    a22 = float(d2)
    a01 = complex(u01)
    a02 = complex(u02)
    a12 = complex(u12)
    v00 = 1 + 0j; v01 = 0j; v02 = 0j
    v10 = 0j; v11 = 1 + 0j; v12 = 0j
    v20 = 0j; v21 = 0j; v22 = 1 + 0j
    n2 = (a00 * a00 + a11 * a11 + a22 * a22
          + 2.0 * (a01.real * a01.real + a01.imag * a01.imag
                   + a02.real * a02.real + a02.imag * a02.imag
                   + a12.real * a12.real + a12.imag * a12.imag))
    if n2 == 0.0:
        return (0.0, 0.0, 0.0), (v00, v01, v02, v10, v11, v12, v20, v21, v22)
    thr2 = (tol * tol) * n2
    for _ in range(max_sweeps):
        off2 = (a01.real * a01.real + a01.imag * a01.imag
                + a02.real * a02.real + a02.imag * a02.imag
                + a12.real * a12.real + a12.imag * a12.imag)
        if off2 <= thr2:
            break
        if a01 != 0j:
            r = abs(a01)
            ph = a01 / r
            th = (a11 - a00) / (2.0 * r)
            t = (1.0 if th >= 0.0 else -1.0) / (abs(th) + math.sqrt(th * th + 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            sph = (t * c) * ph
            sphc = sph.conjugate()
            a00 -= t * r
            a11 += t * r
            a01 = 0j
            x = a02; y = a12
            a02 = c * x - sph * y
            a12 = sphc * x + c * y
            x = v00; y = v01; v00 = c * x - sphc * y; v01 = sph * x + c * y
            x = v10; y = v11; v10 = c * x - sphc * y; v11 = sph * x + c * y
            x = v20; y = v21; v20 = c * x - sphc * y; v21 = sph * x + c * y
        if a02 != 0j:
            r = abs(a02)
            ph = a02 / r
            th = (a22 - a00) / (2.0 * r)
            t = (1.0 if th >= 0.0 else -1.0) / (abs(th) + math.sqrt(th * th + 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            sph = (t * c) * ph
            sphc = sph.conjugate()
            a00 -= t * r
            a22 += t * r
            a02 = 0j
            x = a01; y = a12.conjugate()
            a01 = c * x - sph * y
            a12 = (sphc * x + c * y).conjugate()
            x = v00; y = v02; v00 = c * x - sphc * y; v02 = sph * x + c * y
            x = v10; y = v12; v10 = c * x - sphc * y; v12 = sph * x + c * y
            x = v20; y = v22; v20 = c * x - sphc * y; v22 = sph * x + c * y
        if a12 != 0j:
            r = abs(a12)
            ph = a12 / r
            th = (a22 - a11) / (2.0 * r)
            t = (1.0 if th >= 0.0 else -1.0) / (abs(th) + math.sqrt(th * th + 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            sph = (t * c) * ph
            sphc = sph.conjugate()
            a11 -= t * r
            a22 += t * r
            a12 = 0j
            x = a01; y = a02
            a01 = c * x - sphc * y
            a02 = sph * x + c * y
            x = v01; y = v02; v01 = c * x - sphc * y; v02 = sph * x + c * y
            x = v11; y = v12; v11 = c * x - sphc * y; v12 = sph * x + c * y
            x = v21; y = v22; v21 = c * x - sphc * y; v22 = sph * x + c * y
    return (a00, a11, a22), (v00, v01, v02, v10, v11, v12, v20, v21, v22)


# ---------------------------------------------------------------------------
# Matrix exponential from an eigendecomposition: U = V exp(-i L dt) V^dagger
# ---------------------------------------------------------------------------


def expm2(lams, V, dt):
    l0, l1 = lams
    e0 = cmath.exp(-1j * l0 * dt)
    e1 = cmath.exp(-1j * l1 * dt)
    v00, v01, v10, v11 = V
    w00 = v00 * e0; w01 = v01 * e1
    w10 = v10 * e0; w11 = v11 * e1
    c00 = v00.conjugate(); c01 = v01.conjugate()
    c10 = v10.conjugate(); c11 = v11.conjugate()
    return (w00 * c00 + w01 * c01, w00 * c10 + w01 * c11,
            w10 * c00 + w11 * c01, w10 * c10 + w11 * c11)


def expm3(lams, V, dt):
    l0, l1, l2 = lams
    e0 = cmath.exp(-1j * l0 * dt)
    e1 = cmath.exp(-1j * l1 * dt)
    e2 = cmath.exp(-1j * l2 * dt)
    v00, v01, v02, v10, v11, v12, v20, v21, v22 = V
    w00 = v00 * e0; w01 = v01 * e1; w02 = v02 * e2
    w10 = v10 * e0; w11 = v11 * e1; w12 = v12 * e2
    w20 = v20 * e0; w21 = v21 * e1; w22 = v22 * e2
    c00 = v00.conjugate(); c01 = v01.conjugate(); c02 = v02.conjugate()
    c10 = v10.conjugate(); c11 = v11.conjugate(); c12 = v12.conjugate()
    c20 = v20.conjugate(); c21 = v21.conjugate(); c22 = v22.conjugate()
    return (w00 * c00 + w01 * c01 + w02 * c02,
            w00 * c10 + w01 * c11 + w02 * c12,
            w00 * c20 + w01 * c21 + w02 * c22,
            w10 * c00 + w11 * c01 + w12 * c02,
            w10 * c10 + w11 * c11 + w12 * c12,
            w10 * c20 + w11 * c21 + w12 * c22,
            w20 * c00 + w21 * c01 + w22 * c02,
            w20 * c10 + w21 * c11 + w22 * c12,
            w20 * c20 + w21 * c21 + w22 * c22)


# ---------------------------------------------------------------------------
# Flat matrix algebra
# ---------------------------------------------------------------------------


def mul2(A, B):
    a00, a01, a10, a11 = A
    b00, b01, b10, b11 = B
    return (a00 * b00 + a01 * b10, a00 * b01 + a01 * b11,
            a10 * b00 + a11 * b10, a10 * b01 + a11 * b11)


def mul3(A, B):
    a00, a01, a02, a10, a11, a12, a20, a21, a22 = A
    b00, b01, b02, b10, b11, b12, b20, b21, b22 = B
    return (a00 * b00 + a01 * b10 + a02 * b20,
            a00 * b01 + a01 * b11 + a02 * b21,
            a00 * b02 + a01 * b12 + a02 * b22,
            a10 * b00 + a11 * b10 + a12 * b20,
            a10 * b01 + a11 * b11 + a12 * b21,
            a10 * b02 + a11 * b12 + a12 * b22,
            a20 * b00 + a21 * b10 + a22 * b20,
            a20 * b01 + a21 * b11 + a22 * b21,
            a20 * b02 + a21 * b12 + a22 * b22)


def matvec2(A, x):
    a00, a01, a10, a11 = A
    x0, x1 = x
    return (a00 * x0 + a01 * x1, a10 * x0 + a11 * x1)


def matvec3(A, x):
    a00, a01, a02, a10, a11, a12, a20, a21, a22 = A
    x0, x1, x2 = x
    return (a00 * x0 + a01 * x1 + a02 * x2,
            a10 * x0 + a11 * x1 + a12 * x2,
            a20 * x0 + a21 * x1 + a22 * x2)


def dag2(A):
    a00, a01, a10, a11 = A
    return (a00.conjugate(), a10.conjugate(), a01.conjugate(), a11.conjugate())


def dag3(A):
    a00, a01, a02, a10, a11, a12, a20, a21, a22 = A
    return (a00.conjugate(), a10.conjugate(), a20.conjugate(),
            a01.conjugate(), a11.conjugate(), a21.conjugate(),
            a02.conjugate(), a12.conjugate(), a22.conjugate())


def fro_diff(A, B):
    """Frobenius norm of A - B for equal-length flat tuples."""
    s = 0.0
    for x, y in zip(A, B):
        d = x - y
        s += d.real * d.real + d.imag * d.imag
    return math.sqrt(s)


IDENT2 = (1 + 0j, 0j, 0j, 1 + 0j)
IDENT3 = (1 + 0j, 0j, 0j, 0j, 1 + 0j, 0j, 0j, 0j, 1 + 0j)


def herm_to_flat2(h):
    d0, d1, u01 = h
    return (complex(d0), complex(u01), u01.conjugate(), complex(d1))


def herm_to_flat3(h):
    d0, d1, d2, u01, u02, u12 = h
    return (complex(d0), complex(u01), complex(u02),
            u01.conjugate(), complex(d1), complex(u12),
            u02.conjugate(), u12.conjugate(), complex(d2))


# ---------------------------------------------------------------------------
# Filtered charge step
# ---------------------------------------------------------------------------
#
# For a step of length dt with frozen Hamiltonian H = V L V^dag and frozen
# current I, the exact integral of the within-step Heisenberg current is
#     T = int_0^dt exp(+iHs) I exp(-iHs) ds = V ((V^dag I V) o W) V^dag
# with the frequency filter W_ab = int_0^dt exp(i (l_a - l_b) s) ds.
# Using this (rather than endpoint quadrature) keeps the discrete charge
# operator exactly consistent with the stepped propagator, so the continuity
# identity holds to roundoff.


def _wfilter(delta, dt):
    x = delta * dt
    if abs(x) < 1e-6:
        # series of (exp(i x) - 1)/(i delta); relative error O(x^3)
        return dt * complex(1.0 - x * x / 6.0, 0.5 * x)
    return (cmath.exp(1j * x) - 1.0) / (1j * delta)


def charge_step2(lams, V, Iflat, dt):
    """T = V ((V^dag I V) o W) V^dag for a 2x2 step (see module note)."""
    l0, l1 = lams
    v00, v01, v10, v11 = V
    i00, i01, i10, i11 = Iflat
    # M = V^dag I
    m00 = v00.conjugate() * i00 + v10.conjugate() * i10
    m01 = v00.conjugate() * i01 + v10.conjugate() * i11
    m10 = v01.conjugate() * i00 + v11.conjugate() * i10
    m11 = v01.conjugate() * i01 + v11.conjugate() * i11
    # IV = M V
    iv00 = m00 * v00 + m01 * v10
    iv01 = m00 * v01 + m01 * v11
    iv10 = m10 * v00 + m11 * v10
    iv11 = m10 * v01 + m11 * v11
    w01 = _wfilter(l0 - l1, dt)
    s00 = iv00 * dt
    s11 = iv11 * dt
    s01 = iv01 * w01
    s10 = iv10 * w01.conjugate()
    # back to the site basis: V S V^dag
    t00 = v00 * s00 + v01 * s10
    t01 = v00 * s01 + v01 * s11
    t10 = v10 * s00 + v11 * s10
    t11 = v10 * s01 + v11 * s11
    return (t00 * v00.conjugate() + t01 * v01.conjugate(),
            t00 * v10.conjugate() + t01 * v11.conjugate(),
            t10 * v00.conjugate() + t11 * v01.conjugate(),
            t10 * v10.conjugate() + t11 * v11.conjugate())


def charge_step3(lams, V, Iflat, dt):
    """3x3 analog of :func:`charge_step2`."""
    l0, l1, l2 = lams
    Vd = dag3(V)
    IV = mul3(mul3(Vd, Iflat), V)
    w01 = _wfilter(l0 - l1, dt)
    w02 = _wfilter(l0 - l2, dt)
    w12 = _wfilter(l1 - l2, dt)
    S = (IV[0] * dt, IV[1] * w01, IV[2] * w02,
         IV[3] * w01.conjugate(), IV[4] * dt, IV[5] * w12,
         IV[6] * w02.conjugate(), IV[7] * w12.conjugate(), IV[8] * dt)
    return mul3(mul3(V, S), Vd)
