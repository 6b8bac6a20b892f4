"""Elementary hyperbolic-plane helpers.

Isometries are SL(2,R) matrices acting on the upper half-plane.  Orientation
reversing reflections are stored as det -1 matrices acting by
``z -> (a conj(z) + b) / (c conj(z) + d)``; products of such matrices compose
like the maps themselves because the entries are real.

Points on the hyperboloid model are arrays ``(x0, x1, x2)`` with
``-x0^2 + x1^2 + x2^2 = -1`` and ``x0 > 0``.
"""
import numpy as np

INF = float("inf")

R0 = np.array([[-1.0, 0.0], [0.0, 1.0]])   # reflection in the imaginary axis
J = np.array([[0.0, 1.0], [-1.0, 0.0]])     # half turn about i


def translation(d):
    """Translation by ``d`` along the imaginary axis (upwards for d > 0)."""
    return np.array([[np.exp(d / 2), 0.0], [0.0, np.exp(-d / 2)]])


def rotation(theta):
    """Counter-clockwise rotation by ``theta`` about ``i``."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, s], [-s, c]])


def mobius(M, z):
    """Apply ``M`` to a point of the closed upper half-plane.

    Ideal points are real floats or ``INF``.
    """
    a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    if np.linalg.det(M) < 0:
        z = np.conj(z)
    if isinstance(z, float) and z == INF:
        return a / c if c != 0 else INF
    den = c * z + d
    if den == 0:
        return INF
    w = (a * z + b) / den
    if isinstance(z, float):
        return float(np.real(w))
    return w


def mobius_array(M, z):
    """Vectorised Mobius action on finite complex points."""
    z = np.asarray(z, dtype=complex)
    if np.linalg.det(M) < 0:
        z = np.conj(z)
    return (M[0, 0] * z + M[0, 1]) / (M[1, 0] * z + M[1, 1])


def frame_from_endpoints(a, b):
    """SL2 matrix taking 0 -> a and inf -> b (so i-axis -> geodesic a b)."""
    if b == INF:
        return np.array([[1.0, a], [0.0, 1.0]])
    if a == INF:
        M = np.array([[b, -1.0], [1.0, 0.0]])
        return M
    det = b - a
    M = np.array([[b, a], [1.0, 1.0]])
    if det < 0:
        M = np.array([[b, -a], [1.0, -1.0]])
        det = -det
    return M / np.sqrt(det)


def reflection_in(F):
    """Reflection in the geodesic ``F(i R_+)``."""
    return F @ R0 @ np.linalg.inv(F)


def normalize_sl2(M):
    """Scale to determinant +-1 and fix the sign of the first nonzero entry."""
    M = M / np.sqrt(abs(np.linalg.det(M)))
    flat = M.ravel()
    k = np.flatnonzero(np.abs(flat) > 1e-14)[0]
    return M if flat[k] > 0 else -M


def translation_length(M):
    """Translation length of a hyperbolic element (0 for elliptic/parabolic)."""
    t = abs(np.trace(M))
    if t <= 2.0:
        return 0.0
    return 2.0 * np.arccosh(t / 2.0)


def uhp_to_hyperboloid(z):
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    r2 = x * x + y * y
    # orientation preserving: the disk and Klein charts see the same handedness
    return np.stack([(r2 + 1) / (2 * y), x / y, (r2 - 1) / (2 * y)], axis=-1)


def hyperboloid_to_uhp(X):
    X = np.asarray(X, dtype=float)
    y = 1.0 / (X[..., 0] - X[..., 2])
    return X[..., 1] * y + 1j * y


def disk_to_hyperboloid(u):
    u = np.asarray(u, dtype=complex)
    r2 = (u * np.conj(u)).real
    den = 1.0 - r2
    return np.stack([(1 + r2) / den, 2 * u.real / den, 2 * u.imag / den], axis=-1)


def hyperboloid_to_disk(X):
    X = np.asarray(X, dtype=float)
    return (X[..., 1] + 1j * X[..., 2]) / (1.0 + X[..., 0])


def minkowski(X, Y):
    return -X[..., 0] * Y[..., 0] + X[..., 1] * Y[..., 1] + X[..., 2] * Y[..., 2]


def distance(X, Y):
    """Hyperbolic distance between hyperboloid points (stable for small d)."""
    D = np.asarray(X) - np.asarray(Y)
    q = np.maximum(minkowski(D, D), 0.0)
    return 2.0 * np.arcsinh(np.sqrt(q) / 2.0)


def uhp_distance(z, w):
    z, w = np.asarray(z, dtype=complex), np.asarray(w, dtype=complex)
    return 2.0 * np.arcsinh(np.abs(z - w) / (2.0 * np.sqrt(z.imag * w.imag)))


def midpoint(X, Y):
    M = np.asarray(X) + np.asarray(Y)
    return M / np.sqrt(-minkowski(M, M))[..., None]


def line_normal(X, Y):
    """Unit spacelike normal of the geodesic through hyperboloid points X, Y."""
    n = np.cross(X, Y) * np.array([-1.0, 1.0, 1.0])
    return n / np.sqrt(minkowski(n, n))[..., None]


def distance_to_line(X, n):
    """Distance from points X to the geodesic with unit normal n."""
    return np.arcsinh(np.abs(minkowski(X, n)))


def signed_line_value(X, n):
    return minkowski(X, n)


def triangle_area(a, b, c):
    """Area of a hyperbolic triangle from its side lengths (stable form)."""
    s = 0.5 * (a + b + c)
    p = (np.tanh(s / 2) * np.tanh(np.maximum(s - a, 0) / 2)
         * np.tanh(np.maximum(s - b, 0) / 2) * np.tanh(np.maximum(s - c, 0) / 2))
    return 4.0 * np.arctan(np.sqrt(np.maximum(p, 0.0)))


def triangle_angles(a, b, c):
    """Angles opposite sides a, b, c of a hyperbolic triangle."""
    s = 0.5 * (a + b + c)
    ss = np.sinh(s)

    def half(x, y, z):  # angle opposite x; y, z are the adjacent sides
        num = np.sinh(np.maximum(s - y, 0)) * np.sinh(np.maximum(s - z, 0))
        den = ss * np.sinh(np.maximum(s - x, 0))
        return 2.0 * np.arctan2(np.sqrt(num), np.sqrt(den))
    return half(a, b, c), half(b, c, a), half(c, a, b)
