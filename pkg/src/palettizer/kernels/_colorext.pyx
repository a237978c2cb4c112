# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled color kernels: scalar C loops over the same math as
palettizer.kernels.reference. Built optionally; see setup.py."""

import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, cbrt, cos, exp, fabs, hypot, pow, sin, sqrt

cnp.import_array()

cdef double EPS = 216.0 / 24389.0
cdef double KAPPA = 24389.0 / 27.0
cdef double PI = 3.14159265358979323846
cdef double WX = 0.95047
cdef double WY = 1.0
cdef double WZ = 1.08883


# 8-bit channels take only 256 values; precomputing the transfer function
# removes pow() from the per-pixel loop
cdef double[256] _LIN_LUT

def _fill_lut():
    cdef int i
    cdef double c
    for i in range(256):
        c = i / 255.0
        if c <= 0.04045:
            _LIN_LUT[i] = c / 12.92
        else:
            _LIN_LUT[i] = pow((c + 0.055) / 1.055, 2.4)

_fill_lut()


cdef inline double _linearize(double c255) nogil:
    if c255 <= 0.0:
        return _LIN_LUT[0]
    if c255 >= 255.0:
        return _LIN_LUT[255]
    if c255 == <double> (<long> c255):
        return _LIN_LUT[<long> c255]
    # non-integer inputs fall back to the exact transfer function
    c255 /= 255.0
    if c255 <= 0.04045:
        return c255 / 12.92
    return pow((c255 + 0.055) / 1.055, 2.4)


cdef inline double _gamma(double c) nogil:
    if c <= 0.0031308:
        return 12.92 * c
    return 1.055 * pow(c, 1.0 / 2.4) - 0.055


cdef inline double _flab(double t) nogil:
    if t > EPS:
        return cbrt(t)
    return (KAPPA * t + 16.0) / 116.0


def srgb_to_lab(rgb):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] arr = np.ascontiguousarray(
        np.asarray(rgb, dtype=np.float64).reshape(-1, 3))
    cdef Py_ssize_t n = arr.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, 3), dtype=np.float64)
    cdef double r, g, b, x, y, z, fx, fy, fz
    with nogil:
        for i in range(n):
            r = _linearize(arr[i, 0])
            g = _linearize(arr[i, 1])
            b = _linearize(arr[i, 2])
            x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / WX
            y = (0.2126729 * r + 0.7151522 * g + 0.0721750 * b) / WY
            z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / WZ
            fx = _flab(x)
            fy = _flab(y)
            fz = _flab(z)
            out[i, 0] = 116.0 * fy - 16.0
            out[i, 1] = 500.0 * (fx - fy)
            out[i, 2] = 200.0 * (fy - fz)
    return out


def lab_to_srgb(lab):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] arr = np.ascontiguousarray(
        np.asarray(lab, dtype=np.float64).reshape(-1, 3))
    cdef Py_ssize_t n = arr.shape[0], i
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.empty((n, 3), dtype=np.uint8)
    cdef double ll, fx, fy, fz, x, y, z, r, g, b, v
    cdef int k
    with nogil:
        for i in range(n):
            ll = arr[i, 0]
            fy = (ll + 16.0) / 116.0
            fx = fy + arr[i, 1] / 500.0
            fz = fy - arr[i, 2] / 200.0
            x = fx * fx * fx
            if x <= EPS:
                x = (116.0 * fx - 16.0) / KAPPA
            if ll > KAPPA * EPS:
                y = fy * fy * fy
            else:
                y = ll / KAPPA
            z = fz * fz * fz
            if z <= EPS:
                z = (116.0 * fz - 16.0) / KAPPA
            x *= WX
            y *= WY
            z *= WZ
            r = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z
            g = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z
            b = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z
            for k in range(3):
                v = r if k == 0 else (g if k == 1 else b)
                if v < 0.0:
                    v = 0.0
                elif v > 1.0:
                    v = 1.0
                v = _gamma(v) * 255.0
                # round-half-to-even, matching np.rint
                out[i, k] = <unsigned char> (v + 0.5) if (v - <long> v) != 0.5 \
                    else <unsigned char> ((<long> v + 1) if (<long> v) % 2 else <long> v)
    return out


def ciede2000(lab1, lab2):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] p = np.ascontiguousarray(
        np.asarray(lab1, dtype=np.float64).reshape(-1, 3))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] q = np.ascontiguousarray(
        np.asarray(lab2, dtype=np.float64).reshape(-1, 3))
    cdef Py_ssize_t n = p.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double l1, a1, b1, l2, a2, b2
    cdef double c1, c2, cbar, cbar7, g, a1p, a2p, c1p, c2p, h1p, h2p
    cdef double dlp, dcp, dh, dhp, lbar, cbarp, hsum, hbar, t, dtheta, rc
    cdef double sl, sc, sh, rt, tl, tc, th
    with nogil:
        for i in range(n):
            l1 = p[i, 0]; a1 = p[i, 1]; b1 = p[i, 2]
            l2 = q[i, 0]; a2 = q[i, 1]; b2 = q[i, 2]
            c1 = hypot(a1, b1)
            c2 = hypot(a2, b2)
            cbar = 0.5 * (c1 + c2)
            cbar7 = pow(cbar, 7)
            g = 0.5 * (1.0 - sqrt(cbar7 / (cbar7 + 6103515625.0)))
            a1p = (1.0 + g) * a1
            a2p = (1.0 + g) * a2
            c1p = hypot(a1p, b1)
            c2p = hypot(a2p, b2)
            if b1 == 0.0 and a1p == 0.0:
                h1p = 0.0
            else:
                h1p = atan2(b1, a1p) * 180.0 / PI
                if h1p < 0.0:
                    h1p += 360.0
            if b2 == 0.0 and a2p == 0.0:
                h2p = 0.0
            else:
                h2p = atan2(b2, a2p) * 180.0 / PI
                if h2p < 0.0:
                    h2p += 360.0
            dlp = l2 - l1
            dcp = c2p - c1p
            if c1p * c2p == 0.0:
                dh = 0.0
            else:
                dh = h2p - h1p
                if dh > 180.0:
                    dh -= 360.0
                elif dh < -180.0:
                    dh += 360.0
            dhp = 2.0 * sqrt(c1p * c2p) * sin(dh * PI / 360.0)
            lbar = 0.5 * (l1 + l2)
            cbarp = 0.5 * (c1p + c2p)
            hsum = h1p + h2p
            if c1p * c2p == 0.0:
                hbar = hsum
            elif fabs(h1p - h2p) <= 180.0:
                hbar = 0.5 * hsum
            elif hsum < 360.0:
                hbar = 0.5 * (hsum + 360.0)
            else:
                hbar = 0.5 * (hsum - 360.0)
            t = (1.0 - 0.17 * cos((hbar - 30.0) * PI / 180.0)
                 + 0.24 * cos(2.0 * hbar * PI / 180.0)
                 + 0.32 * cos((3.0 * hbar + 6.0) * PI / 180.0)
                 - 0.20 * cos((4.0 * hbar - 63.0) * PI / 180.0))
            dtheta = 30.0 * exp(-((hbar - 275.0) / 25.0) * ((hbar - 275.0) / 25.0))
            cbar7 = pow(cbarp, 7)
            rc = 2.0 * sqrt(cbar7 / (cbar7 + 6103515625.0))
            sl = 1.0 + 0.015 * (lbar - 50.0) * (lbar - 50.0) / sqrt(20.0 + (lbar - 50.0) * (lbar - 50.0))
            sc = 1.0 + 0.045 * cbarp
            sh = 1.0 + 0.015 * cbarp * t
            rt = -sin(2.0 * dtheta * PI / 180.0) * rc
            tl = dlp / sl
            tc = dcp / sc
            th = dhp / sh
            out[i] = sqrt(tl * tl + tc * tc + th * th + rt * tc * th)
    return out
