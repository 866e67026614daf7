# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: the rejection-sampling loop and Gram absorption.

Bit-identical to ``ilwe._fallback``; the stream layout is documented in
``ilwe.sampling`` and the word generator in ``ilwe.rng``.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport malloc, free

cnp.import_array()

NAME = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t derive(uint64_t parent, uint64_t label) noexcept nogil:
    return mix64(parent ^ mix64((label + 1) * GOLDEN))


cdef struct Stream:
    uint64_t key
    uint64_t ctr


cdef inline uint64_t nxt(Stream* st) noexcept nogil:
    st.ctr += 1
    return mix64(st.key + st.ctr * GOLDEN)


cdef inline int64_t below(Stream* st, int64_t bound) noexcept nogil:
    return <int64_t>(nxt(st) % <uint64_t>bound)


cdef void ball(Stream* st, int64_t* c, Py_ssize_t n, Py_ssize_t rho) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(n):
        c[i] = 0
    for i in range(n - rho, n):
        j = below(st, i + 1)
        c[i] = c[j]
        c[j] = 1 - 2 * <int64_t>(nxt(st) & 1)


cdef void draw_y(Stream* st, int64_t* y, int64_t* v, Py_ssize_t k, Py_ssize_t n,
                 Py_ssize_t rho, int64_t gamma, int kind, int64_t alpha) noexcept nogil:
    cdef Py_ssize_t t, j, i, l, r, idx
    cdef int64_t b, span, val
    if kind == 0 or kind == 1:
        span = 2 * gamma + 1 if kind == 0 else 2 * gamma
        for t in range(n * k):
            y[t] = below(st, span) - gamma + (0 if kind == 0 else 1)
        return
    for j in range(k):
        ball(st, v + j * n, n, rho)
        for i in range(n):
            if v[j * n + i] != 0:
                v[j * n + i] *= 1 + below(st, alpha)
    for t in range(n * k):
        y[t] = 0
    for t in range(rho):
        b = 1 - 2 * <int64_t>(nxt(st) & 1)
        r = below(st, n)
        for j in range(k):
            for l in range(n):
                val = v[j * n + l]
                if val == 0:
                    continue
                idx = l + r
                if idx < n:
                    y[j * n + idx] += b * val
                else:
                    y[j * n + idx - n] -= b * val


def generate_samples(const int64_t[:, ::1] s, Py_ssize_t rho, int64_t gamma, int64_t bound,
                     int kind, int64_t alpha, bint resample_both, uint64_t key,
                     int64_t start, Py_ssize_t count, int64_t max_attempts):
    cdef Py_ssize_t k = s.shape[0], n = s.shape[1]
    cdef Py_ssize_t i, j, l, p, t, nnz_s = 0, nnz_c
    cdef int64_t attempt, val, absz, zmax
    cdef Stream st
    cdef Py_ssize_t failed = -1

    out_c_arr = np.zeros((count, n), dtype=np.int64)
    out_z_arr = np.zeros((count, k, n), dtype=np.int64)
    att_arr = np.zeros(count, dtype=np.int64)
    cdef int64_t[:, ::1] out_c = out_c_arr
    cdef int64_t[:, :, ::1] out_z = out_z_arr
    cdef int64_t[::1] att = att_arr

    cdef int64_t* y = <int64_t*>malloc(n * k * sizeof(int64_t))
    cdef int64_t* v = <int64_t*>malloc(n * k * sizeof(int64_t))
    cdef int64_t* z = <int64_t*>malloc(n * k * sizeof(int64_t))
    cdef int64_t* c = <int64_t*>malloc(n * sizeof(int64_t))
    cdef Py_ssize_t* cpos = <Py_ssize_t*>malloc(n * sizeof(Py_ssize_t))
    # nonzeros of s as (component, position, value)
    cdef Py_ssize_t* s_comp = <Py_ssize_t*>malloc(n * k * sizeof(Py_ssize_t))
    cdef Py_ssize_t* s_pos = <Py_ssize_t*>malloc(n * k * sizeof(Py_ssize_t))
    cdef int64_t* s_val = <int64_t*>malloc(n * k * sizeof(int64_t))
    if not (y and v and z and c and cpos and s_comp and s_pos and s_val):
        free(y); free(v); free(z); free(c); free(cpos); free(s_comp); free(s_pos); free(s_val)
        raise MemoryError()

    for j in range(k):
        for l in range(n):
            if s[j, l] != 0:
                s_comp[nnz_s] = j
                s_pos[nnz_s] = l
                s_val[nnz_s] = s[j, l]
                nnz_s += 1

    with nogil:
        for i in range(count):
            st.key = derive(key, <uint64_t>(start + i))
            st.ctr = 0
            if not resample_both:
                draw_y(&st, y, v, k, n, rho, gamma, kind, alpha)
            attempt = 0
            while True:
                attempt += 1
                if attempt > max_attempts:
                    failed = i
                    break
                if resample_both:
                    draw_y(&st, y, v, k, n, rho, gamma, kind, alpha)
                ball(&st, c, n, rho)
                nnz_c = 0
                for l in range(n):
                    if c[l] != 0:
                        cpos[nnz_c] = l
                        nnz_c += 1
                for t in range(n * k):
                    z[t] = y[t]
                for p in range(nnz_c):
                    for t in range(nnz_s):
                        l = cpos[p] + s_pos[t]
                        val = c[cpos[p]] * s_val[t]
                        if l < n:
                            z[s_comp[t] * n + l] += val
                        else:
                            z[s_comp[t] * n + l - n] -= val
                zmax = 0
                for t in range(n * k):
                    absz = z[t] if z[t] >= 0 else -z[t]
                    if absz > zmax:
                        zmax = absz
                if zmax < bound:
                    break
            if failed >= 0:
                break
            att[i] = attempt
            for l in range(n):
                out_c[i, l] = c[l]
            for j in range(k):
                for l in range(n):
                    out_z[i, j, l] = z[j * n + l]

    free(y); free(v); free(z); free(c); free(cpos); free(s_comp); free(s_pos); free(s_val)
    return out_c_arr, out_z_arr, att_arr, failed


def absorb_samples(const int64_t[:, ::1] c, const int64_t[:, :, ::1] z,
                   int64_t[::1] t, int64_t[:, ::1] u):
    cdef Py_ssize_t m = c.shape[0], n = c.shape[1], k = z.shape[1]
    cdef Py_ssize_t i, a, b, p, q, j, l
    cdef int64_t cp, zz = 0, w
    cdef Py_ssize_t nnz
    cdef Py_ssize_t* pos = <Py_ssize_t*>malloc(n * sizeof(Py_ssize_t))
    if not pos:
        raise MemoryError()
    with nogil:
        for i in range(m):
            nnz = 0
            for l in range(n):
                if c[i, l] != 0:
                    pos[nnz] = l
                    nnz += 1
            # t_d = sum over nonzero pairs (p, q) with q - p = d mod n, negated on wrap
            for a in range(nnz):
                p = pos[a]
                cp = c[i, p]
                for b in range(nnz):
                    q = pos[b]
                    if q >= p:
                        t[q - p] += cp * c[i, q]
                    else:
                        t[q - p + n] -= cp * c[i, q]
            # u_j[d] = sum_p c_p * z_j[d + p], negated when d + p wraps
            for a in range(nnz):
                p = pos[a]
                cp = c[i, p]
                for j in range(k):
                    for l in range(n - p):
                        u[j, l] += cp * z[i, j, l + p]
                    for l in range(n - p, n):
                        u[j, l] -= cp * z[i, j, l + p - n]
            for j in range(k):
                for l in range(n):
                    w = z[i, j, l]
                    zz += w * w
    free(pos)
    return zz
