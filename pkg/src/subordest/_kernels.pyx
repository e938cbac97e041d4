# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled path kernels.

Philox4x64-10 is reproduced here word for word as numpy's ``Philox`` bit
generator emits it, so both backends consume identical raw streams.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, log, exp, M_PI
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, realloc, free

cnp.import_array()

cdef extern from *:
    """
    #include <stdint.h>
    typedef struct {
        uint64_t ctr[4];
        uint64_t key[2];
        uint64_t buf[4];
        int pos;
    } sub_philox;

    static inline uint64_t sub_mulhilo(uint64_t a, uint64_t b, uint64_t *hi) {
        __uint128_t p = (__uint128_t)a * (__uint128_t)b;
        *hi = (uint64_t)(p >> 64);
        return (uint64_t)p;
    }

    static inline void sub_philox_block(sub_philox *s) {
        uint64_t c0 = s->ctr[0], c1 = s->ctr[1], c2 = s->ctr[2], c3 = s->ctr[3];
        uint64_t k0 = s->key[0], k1 = s->key[1];
        for (int r = 0; r < 10; r++) {
            uint64_t hi0, hi1, lo0, lo1;
            if (r > 0) {
                k0 += 0x9E3779B97F4A7C15ULL;
                k1 += 0xBB67AE8584CAA73BULL;
            }
            lo0 = sub_mulhilo(0xD2E7470EE14C6C93ULL, c0, &hi0);
            lo1 = sub_mulhilo(0xCA5A826395121157ULL, c2, &hi1);
            c0 = hi1 ^ c1 ^ k0;
            c1 = lo1;
            c2 = hi0 ^ c3 ^ k1;
            c3 = lo0;
        }
        s->buf[0] = c0; s->buf[1] = c1; s->buf[2] = c2; s->buf[3] = c3;
    }

    static inline void sub_philox_init(sub_philox *s, uint64_t k0, uint64_t k1) {
        s->ctr[0] = s->ctr[1] = s->ctr[2] = s->ctr[3] = 0;
        s->key[0] = k0; s->key[1] = k1;
        s->pos = 4;
    }

    static inline uint64_t sub_philox_next(sub_philox *s) {
        if (s->pos >= 4) {
            if (++s->ctr[0] == 0 && ++s->ctr[1] == 0 && ++s->ctr[2] == 0) ++s->ctr[3];
            sub_philox_block(s);
            s->pos = 0;
        }
        return s->buf[s->pos++];
    }
    """
    ctypedef struct sub_philox:
        pass
    void sub_philox_init(sub_philox *s, uint64_t k0, uint64_t k1) nogil
    uint64_t sub_philox_next(sub_philox *s) nogil


cdef double TWO_M52 = 2.220446049250313e-16


cdef inline double open_uniform(uint64_t r) noexcept nogil:
    return (<double>(r >> 12) + 0.5) * TWO_M52


cdef inline double draw_increment(sub_philox *s, double beta, double a, double log_scale) noexcept nogil:
    cdef double u = M_PI * open_uniform(sub_philox_next(s))
    cdef double w = -log(open_uniform(sub_philox_next(s)))
    return exp(log(sin(beta * u)) + a * log(sin((1.0 - beta) * u))
               - log(sin(u)) / beta - a * log(w) + log_scale)


def increments_from_raw(cnp.uint64_t[::1] raw, double beta, double log_scale):
    cdef Py_ssize_t m = raw.shape[0] // 2, i
    cdef double a = (1.0 - beta) / beta, u, w
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            u = M_PI * open_uniform(raw[2 * i])
            w = -log(open_uniform(raw[2 * i + 1]))
            o[i] = exp(log(sin(beta * u)) + a * log(sin((1.0 - beta) * u))
                       - log(sin(u)) / beta - a * log(w) + log_scale)
    return out


def simulate_counts(cnp.uint64_t[:, ::1] keys, double beta, double log_scale,
                    double horizon, int64_t max_steps, int64_t hint=0):
    cdef Py_ssize_t n = keys.shape[0], p
    cdef double a = (1.0 - beta) / beta, total
    cdef int64_t k
    cdef sub_philox st
    counts = np.empty(n, dtype=np.int64)
    totals = np.empty(n, dtype=np.float64)
    cdef int64_t[::1] c = counts
    cdef double[::1] t = totals
    with nogil:
        for p in range(n):
            sub_philox_init(&st, keys[p, 0], keys[p, 1])
            total = 0.0
            k = 0
            while True:
                total += draw_increment(&st, beta, a, log_scale)
                if total > horizon:
                    break
                k += 1
                if k > max_steps:
                    k = -1
                    break
            c[p] = k
            t[p] = total
    return counts, totals


def simulate_lengths(cnp.uint64_t[:, ::1] keys, double beta, double log_scale,
                     double horizon, int64_t max_steps, int64_t hint=0):
    cdef Py_ssize_t n = keys.shape[0], p
    cdef double a = (1.0 - beta) / beta, total, z
    cdef int64_t k
    cdef Py_ssize_t used = 0, cap = 1024
    cdef double *buf = <double *> malloc(cap * sizeof(double))
    cdef double *tmp
    cdef bint oom = False
    cdef sub_philox st
    if buf == NULL:
        raise MemoryError()
    counts = np.empty(n, dtype=np.int64)
    totals = np.empty(n, dtype=np.float64)
    cdef int64_t[::1] c = counts
    cdef double[::1] t = totals
    with nogil:
        for p in range(n):
            sub_philox_init(&st, keys[p, 0], keys[p, 1])
            total = 0.0
            k = 0
            while True:
                z = draw_increment(&st, beta, a, log_scale)
                if used == cap:
                    cap *= 2
                    tmp = <double *> realloc(buf, cap * sizeof(double))
                    if tmp == NULL:
                        oom = True
                        break
                    buf = tmp
                buf[used] = z
                used += 1
                total += z
                if total > horizon:
                    break
                k += 1
                if k > max_steps:
                    k = -1
                    break
            if oom:
                break
            c[p] = k
            t[p] = total
    if oom:
        free(buf)
        raise MemoryError()
    lengths = np.empty(used, dtype=np.float64)
    cdef double[::1] L = lengths
    cdef Py_ssize_t i
    for i in range(used):
        L[i] = buf[i]
    free(buf)
    return counts, totals, lengths
