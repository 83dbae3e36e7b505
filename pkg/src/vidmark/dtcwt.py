"""2-D dual-tree complex wavelet transform.

Level 1 uses the near-symmetric (13,19)-tap biorthogonal pair, deeper levels
the 14-tap quarter-shift pair.  Every level yields six complex directional
sub-bands, ordered d = 1..6 ↔ +15°, +45°, +75°, −75°, −45°, −15°.

All filtering uses half-sample symmetric extension (the end sample repeats).
Odd plane sizes are padded by repeating the last row/column before level 1;
at deeper levels the low-pass image is padded by one row/column at each end
whenever its size is not a multiple of four.  ``inverse`` crops both back.
"""
from dataclasses import dataclass

import numpy as np

from .kernels import convolve_columns

MAX_LEVELS = 6

# near-symmetric 13/19 analysis filters
NEAR_SYM_H0 = np.array([
    -0.0017578125, 0.0, 0.022265625, -0.046875, -0.0482421875, 0.296875,
    0.55546875,
    0.296875, -0.0482421875, -0.046875, 0.022265625, 0.0, -0.0017578125,
])
NEAR_SYM_H1 = np.array([
    -7.062639508928571e-05, 0.0, 0.0013419015066964285, -0.0018833705357142855,
    -0.007156808035714285, 0.023856026785714284, 0.05564313616071428,
    -0.05168805803571428, -0.29975760323660716,
    0.5594308035714286,
    -0.29975760323660716, -0.05168805803571428, 0.05564313616071428,
    0.023856026785714284, -0.007156808035714285, -0.0018833705357142855,
    0.0013419015066964285, 0.0, -7.062639508928571e-05,
])
# 14-tap quarter-shift low-pass, tree a
QSHIFT_H0A = np.array([
    0.003253142763653182, -0.00388321199915849, 0.03466034684485349,
    -0.03887280126882779, -0.11720388769911527, 0.27529538466888204,
    0.7561456438925225, 0.5688104207121227, 0.011866092033797,
    -0.1067118046866654, 0.023825384794920298, 0.01702522388155399,
    -0.005439475937274115, -0.004556895628475491,
])


def _alternate(h, centre):
    signs = np.array([(-1.0) ** abs(i - centre) for i in range(len(h))])
    return h * signs


# synthesis filters follow from the analysis pair by sign alternation
NEAR_SYM_G0 = _alternate(NEAR_SYM_H1, len(NEAR_SYM_H1) // 2)
NEAR_SYM_G1 = _alternate(NEAR_SYM_H0, len(NEAR_SYM_H0) // 2)

QSHIFT_H0B = QSHIFT_H0A[::-1].copy()
QSHIFT_H1A = _alternate(QSHIFT_H0B, 0)
QSHIFT_H1B = QSHIFT_H1A[::-1].copy()
QSHIFT_G0A, QSHIFT_G0B = QSHIFT_H0B, QSHIFT_H0A
QSHIFT_G1A, QSHIFT_G1B = QSHIFT_H1B, QSHIFT_H1A

ORIENTATIONS_DEG = (15, 45, 75, -75, -45, -15)

# sub-band slots filled by each separable filter combination
_HORIZONTAL = (0, 5)
_DIAGONAL = (1, 4)
_VERTICAL = (2, 3)


class DtcwtError(ValueError):
    pass


@dataclass(frozen=True)
class DtcwtPyramid:
    """Low-pass residual plus six complex sub-bands per level.

    ``levels[l - 1][d - 1]`` is the complex sub-band for level ``l`` and
    direction ``d``; each level array has shape ``(6, rows, cols)``.
    ``original_extent`` is the (rows, cols) of the plane before padding.
    """

    lowpass: np.ndarray
    levels: tuple
    original_extent: tuple

    @property
    def depth(self):
        return len(self.levels)

    def subband(self, level, direction):
        _check_index(self, level, direction)
        return self.levels[level - 1][direction - 1]


def _check_index(pyramid, level, direction):
    if not 1 <= level <= pyramid.depth:
        raise DtcwtError(f"level {level} outside 1..{pyramid.depth}")
    if not 1 <= direction <= 6:
        raise DtcwtError(f"direction {direction} outside 1..6")


def _reflect(idx, n):
    period = 2 * n
    i = np.mod(idx, period)
    return np.where(i >= n, period - 1 - i, i)


def _colfilter(x, h):
    m2 = len(h) // 2
    r = x.shape[0]
    xe = _reflect(np.arange(-m2, r + m2), r)
    return convolve_columns(x[xe], h)


def _coldfilt(x, ha, hb):
    """Filter columns with the q-shift pair and decimate by two."""
    r, c = x.shape
    if r % 4:
        raise DtcwtError("rows must be a multiple of 4 for decimation")
    m = len(ha)
    xe = _reflect(np.arange(-m, r + m), r)
    t = np.arange(5, r + 2 * m - 2, 4)
    hao, hae = ha[0::2], ha[1::2]
    hbo, hbe = hb[0::2], hb[1::2]
    y = np.empty((r // 2, c))
    if np.sum(ha * hb) > 0:
        s1, s2 = slice(0, None, 2), slice(1, None, 2)
    else:
        s1, s2 = slice(1, None, 2), slice(0, None, 2)
    y[s1] = convolve_columns(x[xe[t - 1]], hao) + convolve_columns(x[xe[t - 3]], hae)
    y[s2] = convolve_columns(x[xe[t]], hbo) + convolve_columns(x[xe[t - 2]], hbe)
    return y


def _colifilt(x, ha, hb):
    """Interpolate columns by two with the q-shift synthesis pair."""
    r, c = x.shape
    m = len(ha)
    assert (m // 2) % 2 == 1, "q-shift filters with odd half-length expected"
    xe = _reflect(np.arange(-(m // 2), r + m // 2), r)
    t = np.arange(2, r + m - 1, 2)
    if np.sum(ha * hb) > 0:
        ta, tb = t, t - 1
    else:
        ta, tb = t - 1, t
    hao, hae = ha[0::2], ha[1::2]
    hbo, hbe = hb[0::2], hb[1::2]
    y = np.empty((2 * r, c))
    xa = x[xe[ta]]
    xb = x[xe[tb]]
    y[0::4] = convolve_columns(xb, hao)
    y[1::4] = convolve_columns(xa, hbo)
    y[2::4] = convolve_columns(xb, hae)
    y[3::4] = convolve_columns(xa, hbe)
    return y


def _quads_to_complex(y):
    """Pack each 2x2 quad (a b / c d) into the two complex outputs of a pair."""
    a = y[0::2, 0::2]
    b = y[0::2, 1::2]
    c = y[1::2, 0::2]
    d = y[1::2, 1::2]
    p = (a + 1j * b) * np.sqrt(0.5)
    q = (d - 1j * c) * np.sqrt(0.5)
    return p - q, p + q


def _complex_to_quads(z0, z1):
    p = (z0 + z1) * np.sqrt(0.5)
    q = (z0 - z1) * np.sqrt(0.5)
    out = np.empty((2 * z0.shape[0], 2 * z0.shape[1]))
    out[0::2, 0::2] = p.real
    out[0::2, 1::2] = p.imag
    out[1::2, 0::2] = q.imag
    out[1::2, 1::2] = -q.real
    return out


def _pack_level(horizontal, vertical, diagonal):
    bands = np.empty((6,) + (horizontal.shape[0] // 2, horizontal.shape[1] // 2), dtype=complex)
    for slots, quads in ((_HORIZONTAL, horizontal), (_VERTICAL, vertical), (_DIAGONAL, diagonal)):
        bands[slots[0]], bands[slots[1]] = _quads_to_complex(quads)
    return bands


def max_depth(shape):
    """Deepest decomposition a plane of ``shape`` supports."""
    smallest = min(shape)
    if smallest < 2:
        return 0
    return min(MAX_LEVELS, int(np.floor(np.log2(smallest))))


def forward(plane, levels=3) -> DtcwtPyramid:
    x = np.asarray(plane, dtype=np.float64)
    if x.ndim != 2:
        raise DtcwtError(f"expected a 2-D plane, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DtcwtError("plane contains non-finite samples")
    if not 1 <= levels <= MAX_LEVELS:
        raise DtcwtError(f"levels must be in 1..{MAX_LEVELS}, got {levels}")
    feasible = max_depth(x.shape)
    if levels > feasible:
        raise DtcwtError(
            f"plane {x.shape[0]}x{x.shape[1]} too small for {levels} levels; "
            f"max feasible depth is {feasible}")

    extent = x.shape
    if x.shape[0] % 2:
        x = np.vstack((x, x[-1:]))
    if x.shape[1] % 2:
        x = np.hstack((x, x[:, -1:]))

    lo = _colfilter(x, NEAR_SYM_H0).T
    hi = _colfilter(x, NEAR_SYM_H1).T
    lolo = _colfilter(lo, NEAR_SYM_H0).T
    bands = [_pack_level(
        _colfilter(hi, NEAR_SYM_H0).T,
        _colfilter(lo, NEAR_SYM_H1).T,
        _colfilter(hi, NEAR_SYM_H1).T,
    )]

    for _ in range(1, levels):
        if lolo.shape[0] % 4:
            lolo = np.vstack((lolo[:1], lolo, lolo[-1:]))
        if lolo.shape[1] % 4:
            lolo = np.hstack((lolo[:, :1], lolo, lolo[:, -1:]))
        lo = _coldfilt(lolo, QSHIFT_H0B, QSHIFT_H0A).T
        hi = _coldfilt(lolo, QSHIFT_H1B, QSHIFT_H1A).T
        lolo = _coldfilt(lo, QSHIFT_H0B, QSHIFT_H0A).T
        bands.append(_pack_level(
            _coldfilt(hi, QSHIFT_H0B, QSHIFT_H0A).T,
            _coldfilt(lo, QSHIFT_H1B, QSHIFT_H1A).T,
            _coldfilt(hi, QSHIFT_H1B, QSHIFT_H1A).T,
        ))

    return DtcwtPyramid(lowpass=lolo, levels=tuple(bands), original_extent=tuple(extent))


def _unpack_level(bands):
    return (
        _complex_to_quads(bands[_HORIZONTAL[0]], bands[_HORIZONTAL[1]]),
        _complex_to_quads(bands[_VERTICAL[0]], bands[_VERTICAL[1]]),
        _complex_to_quads(bands[_DIAGONAL[0]], bands[_DIAGONAL[1]]),
    )


def inverse(pyramid: DtcwtPyramid):
    levels = pyramid.levels
    if not levels:
        raise DtcwtError("pyramid has no levels")
    for bands in levels:
        if bands.ndim != 3 or bands.shape[0] != 6:
            raise DtcwtError(f"level arrays must have shape (6, rows, cols), got {bands.shape}")

    z = np.asarray(pyramid.lowpass, dtype=np.float64)
    for level in range(len(levels), 1, -1):
        bands = levels[level - 1]
        if z.shape != tuple(2 * s for s in bands.shape[1:]):
            raise DtcwtError(
                f"level {level} sub-bands {bands.shape[1:]} do not match "
                f"low-pass {z.shape}")
        horizontal, vertical, diagonal = _unpack_level(bands)
        y1 = _colifilt(z, QSHIFT_G0B, QSHIFT_G0A) + _colifilt(horizontal, QSHIFT_G1B, QSHIFT_G1A)
        y2 = _colifilt(vertical, QSHIFT_G0B, QSHIFT_G0A) + _colifilt(diagonal, QSHIFT_G1B, QSHIFT_G1A)
        z = (_colifilt(y1.T, QSHIFT_G0B, QSHIFT_G0A) + _colifilt(y2.T, QSHIFT_G1B, QSHIFT_G1A)).T

        target = tuple(2 * s for s in levels[level - 2].shape[1:])
        if z.shape[0] != target[0]:
            z = z[1:-1]
        if z.shape[1] != target[1]:
            z = z[:, 1:-1]
        if z.shape != target:
            raise DtcwtError(f"level {level - 1} sub-bands inconsistent with level {level}")

    bands = levels[0]
    if z.shape != tuple(2 * s for s in bands.shape[1:]):
        raise DtcwtError(f"level 1 sub-bands {bands.shape[1:]} do not match low-pass {z.shape}")
    horizontal, vertical, diagonal = _unpack_level(bands)
    y1 = _colfilter(z, NEAR_SYM_G0) + _colfilter(horizontal, NEAR_SYM_G1)
    y2 = _colfilter(vertical, NEAR_SYM_G0) + _colfilter(diagonal, NEAR_SYM_G1)
    z = (_colfilter(y1.T, NEAR_SYM_G0) + _colfilter(y2.T, NEAR_SYM_G1)).T

    rows, cols = pyramid.original_extent
    return z[:rows, :cols]


def subband_magnitude(pyramid: DtcwtPyramid, level, direction):
    band = pyramid.subband(level, direction)
    return np.hypot(band.real, band.imag)


def scale_subband(pyramid: DtcwtPyramid, level, direction, ratio) -> DtcwtPyramid:
    """Return a copy with one sub-band multiplied by ``ratio`` (phase kept)."""
    _check_index(pyramid, level, direction)
    if not np.isfinite(ratio) or ratio <= 0:
        raise DtcwtError(f"ratio must be finite and > 0, got {ratio}")
    levels = list(pyramid.levels)
    bands = levels[level - 1].copy()
    bands[direction - 1] *= ratio
    levels[level - 1] = bands
    return DtcwtPyramid(pyramid.lowpass, tuple(levels), pyramid.original_extent)
