# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. ``_fallback.py`` mirrors every function here
operation for operation, so both produce identical bits from the same inputs."""
from libc.math cimport exp

cdef double EXP_CLAMP = 700.0


def gibbs_sweeps(signed char[::1] state,
                 const double[::1] h,
                 const long long[::1] indptr,
                 const long long[::1] indices,
                 const double[::1] weights,
                 double beta,
                 const double[:, ::1] uniforms,
                 Py_ssize_t record_every,
                 signed char[:, ::1] out):
    """Sequential-scan heat-bath sweeps; one row of ``uniforms`` per sweep.

    After every ``record_every`` sweeps the state is copied into the next row
    of ``out``. Returns the number of rows written.
    """
    cdef Py_ssize_t n = state.shape[0]
    cdef Py_ssize_t n_sweeps = uniforms.shape[0]
    cdef Py_ssize_t sweep, i, j, k
    cdef Py_ssize_t row = 0
    cdef double field, x, p_up
    with nogil:
        for sweep in range(n_sweeps):
            for i in range(n):
                field = h[i]
                for k in range(indptr[i], indptr[i + 1]):
                    field = field + weights[k] * state[indices[k]]
                x = 2.0 * beta * field
                if x > EXP_CLAMP:
                    x = EXP_CLAMP
                elif x < -EXP_CLAMP:
                    x = -EXP_CLAMP
                p_up = 1.0 / (1.0 + exp(x))
                if uniforms[sweep, i] < p_up:
                    state[i] = 1
                else:
                    state[i] = -1
            if record_every > 0 and (sweep + 1) % record_every == 0:
                for j in range(n):
                    out[row, j] = state[j]
                row += 1
    return row


def spinbath_persist(signed char[:, ::1] states,
                     const double[:, ::1] uniforms,
                     double copy_prob,
                     signed char[::1] previous,
                     bint has_previous):
    """In place: each spin of read ``r`` copies read ``r - 1`` when its uniform
    is below ``copy_prob``. Read 0 copies from ``previous`` if given."""
    cdef Py_ssize_t n_reads = states.shape[0]
    cdef Py_ssize_t n = states.shape[1]
    cdef Py_ssize_t r, i
    with nogil:
        for r in range(n_reads):
            if r == 0:
                if not has_previous:
                    continue
                for i in range(n):
                    if uniforms[r, i] < copy_prob:
                        states[r, i] = previous[i]
            else:
                for i in range(n):
                    if uniforms[r, i] < copy_prob:
                        states[r, i] = states[r - 1, i]
