"""Pure-Python versions of the compiled kernels.

Same arithmetic in the same order as ``_kernels.pyx``: ``math.exp`` and the
C ``exp`` are both the platform libm, so outputs match bit for bit.
"""
import math

EXP_CLAMP = 700.0


def gibbs_sweeps(state, h, indptr, indices, weights, beta, uniforms, record_every, out):
    n = state.shape[0]
    s = [int(v) for v in state]
    hl = [float(v) for v in h]
    ptr = [int(v) for v in indptr]
    idx = [int(v) for v in indices]
    w = [float(v) for v in weights]
    beta = float(beta)
    row = 0
    for sweep in range(uniforms.shape[0]):
        u = uniforms[sweep].tolist()
        for i in range(n):
            field = hl[i]
            for k in range(ptr[i], ptr[i + 1]):
                field = field + w[k] * s[idx[k]]
            x = 2.0 * beta * field
            if x > EXP_CLAMP:
                x = EXP_CLAMP
            elif x < -EXP_CLAMP:
                x = -EXP_CLAMP
            p_up = 1.0 / (1.0 + math.exp(x))
            s[i] = 1 if u[i] < p_up else -1
        if record_every > 0 and (sweep + 1) % record_every == 0:
            out[row, :] = s
            row += 1
    state[:] = s
    return row


def spinbath_persist(states, uniforms, copy_prob, previous, has_previous):
    for r in range(states.shape[0]):
        if r == 0:
            if not has_previous:
                continue
            source = previous
        else:
            source = states[r - 1]
        mask = uniforms[r] < copy_prob
        states[r, mask] = source[mask]
