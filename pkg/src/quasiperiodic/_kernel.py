"""Compiled inner loops (numba).

The event loop keeps one pending firing per oscillator in a sorted ring
buffer keyed by ``(time, oscillator index)``.  Oscillator indices are assigned in
``(neuron id, stream)`` order, so this key is the engine's total order.
"""

import numpy as np
from numba import njit

# return codes of run_events
DONE = 0
BUFFER_FULL = 1
NEED_POISSON = 2

SHUTDOWN = 0
WAKE = 1


@njit(cache=True, inline="always")
def _less(t_a, o_a, t_b, o_b):
    return t_a < t_b or (t_a == t_b and o_a < o_b)


@njit(cache=True)
def queue_insert(q_t, q_o, head, size, t, o):
    """Insert into the sorted ring buffer; returns the new size.

    Firings are re-inserted about one period ahead, i.e. near the tail, so
    the backward scan is short for periodic oscillators.
    """
    mask = q_t.shape[0] - 1
    pos = head + size
    while pos > head:
        prev = (pos - 1) & mask
        if _less(t, o, q_t[prev], q_o[prev]):
            q_t[pos & mask] = q_t[prev]
            q_o[pos & mask] = q_o[prev]
            pos -= 1
        else:
            break
    q_t[pos & mask] = t
    q_o[pos & mask] = o
    return size + 1


@njit(cache=True)
def osc_time(o, k, osc_freq, osc_phase, osc_poisson, pbuf, pbase):
    """Firing time of event ``k`` of oscillator ``o``; -1.0 if not buffered."""
    if osc_poisson[o]:
        j = k - pbase[o]
        if j >= pbuf.shape[1]:
            return -1.0
        return pbuf[o, j]
    return (osc_phase[o] + k) / osc_freq[o]


@njit(cache=True)
def run_events(
    state, active, fsm_of, init_state, trans, outmap,
    osc_owner, osc_stream, osc_freq, osc_phase, osc_poisson, osc_k, pbuf, pbase,
    q_t, q_o, q_state,
    w_ptr, w_tgt, w_sym, c_ptr, c_tgt, c_act,
    rec_mask, counts,
    t_stop, count_neuron, remaining,
    out_t, out_src, out_stream, out_bit, n_out,
    push_first, aux, tnow,
):
    head = q_state[0]
    size = q_state[1]
    mask = q_t.shape[0] - 1
    if push_first >= 0:
        t = osc_time(push_first, osc_k[push_first], osc_freq, osc_phase, osc_poisson, pbuf, pbase)
        size = queue_insert(q_t, q_o, head, size, t, push_first)
    cap = out_t.shape[0]
    code = DONE
    while size > 0:
        t = q_t[head & mask]
        o = q_o[head & mask]
        if t > t_stop:
            break
        src = osc_owner[o]
        emitting = active[src] != 0
        if emitting and rec_mask[src] != 0 and n_out[0] >= cap:
            code = BUFFER_FULL
            break
        head += 1
        size -= 1
        if emitting:
            tnow[0] = t
            f = fsm_of[src]
            bit = outmap[f, state[src]]
            counts[src] += 1
            if rec_mask[src] != 0:
                i = n_out[0]
                out_t[i] = t
                out_src[i] = src
                out_stream[i] = osc_stream[o]
                out_bit[i] = bit
                n_out[0] = i + 1
            key = 2 * o + bit
            for e in range(w_ptr[key], w_ptr[key + 1]):
                tg = w_tgt[e]
                state[tg] = trans[fsm_of[tg], state[tg], w_sym[e]]
            for e in range(c_ptr[key], c_ptr[key + 1]):
                tg = c_tgt[e]
                if c_act[e] == SHUTDOWN:
                    active[tg] = 0
                else:
                    active[tg] = 1
                    state[tg] = init_state[tg]
        osc_k[o] += 1
        nt = osc_time(o, osc_k[o], osc_freq, osc_phase, osc_poisson, pbuf, pbase)
        stop_now = False
        if emitting and (count_neuron < 0 or count_neuron == src):
            remaining[0] -= 1
            stop_now = remaining[0] <= 0
        if nt < 0.0:
            aux[0] = o
            aux[1] = 1 if stop_now else 0
            code = NEED_POISSON
            break
        size = queue_insert(q_t, q_o, head, size, nt, o)
        if stop_now:
            break
    q_state[0] = head & mask
    q_state[1] = size
    return code


@njit(cache=True)
def collect_samples(src, stream, bit, times, unit_slot, osc_slot, n_osc, out_idx, out_t):
    """Snapshot the joint unit state whenever every tracked oscillator has fired.

    ``unit_slot[neuron]`` is the bit position of a unit (-1 if untracked);
    ``osc_slot[neuron, stream]`` numbers the tracked oscillators.
    """
    fired = np.zeros(n_osc, dtype=np.uint8)
    missing = n_osc
    config = np.int64(0)
    n = 0
    for e in range(src.shape[0]):
        u = unit_slot[src[e]]
        if u < 0:
            continue
        if bit[e]:
            config |= np.int64(1) << u
        else:
            config &= ~(np.int64(1) << u)
        s = osc_slot[src[e], stream[e]]
        if fired[s] == 0:
            fired[s] = 1
            missing -= 1
            if missing == 0:
                out_idx[n] = config
                out_t[n] = times[e]
                n += 1
                fired[:] = 0
                missing = n_osc
    return n


@njit(cache=True)
def gibbs_sweeps(W, vbias, hbias, temperature, v, h, uniforms, out_idx):
    """Block Gibbs sweeps (hidden | visible, then visible | hidden).

    ``uniforms`` has shape ``(n_sweeps, nv + nh)``; ``v`` and ``h`` are
    updated in place so consecutive calls continue one chain.
    """
    nv, nh = W.shape
    for s in range(uniforms.shape[0]):
        for j in range(nh):
            a = hbias[j]
            for i in range(nv):
                if v[i]:
                    a += W[i, j]
            h[j] = 1 if uniforms[s, nv + j] < 1.0 / (1.0 + np.exp(-a / temperature)) else 0
        for i in range(nv):
            a = vbias[i]
            for j in range(nh):
                if h[j]:
                    a += W[i, j]
            v[i] = 1 if uniforms[s, i] < 1.0 / (1.0 + np.exp(-a / temperature)) else 0
        idx = np.int64(0)
        for i in range(nv):
            if v[i]:
                idx |= np.int64(1) << i
        for j in range(nh):
            if h[j]:
                idx |= np.int64(1) << (nv + j)
        out_idx[s] = idx
