"""Compiled, GIL-free inner loops: atomic test-and-set and worker traversal."""
import numpy as np
from numba import njit, types
from numba.core import cgutils
from numba.extending import intrinsic

ARRIVAL = 0  # every node a worker claims is itself an answer
BASE = 1     # answers are base-relation successors of claimed nodes


@intrinsic
def _xchg_one(typingctx, flags, idx):
    sig = types.uint8(flags, idx)

    def codegen(context, builder, signature, args):
        aryty = signature.args[0]
        ary = context.make_array(aryty)(context, builder, args[0])
        ptr = cgutils.get_item_pointer(context, builder, aryty, ary, [args[1]])
        one = context.get_constant(types.uint8, 1)
        return builder.atomic_rmw("xchg", ptr, one, "seq_cst")

    return sig, codegen


@njit(nogil=True, cache=True, inline="always")
def test_and_set(flags, i):
    # plain read first: most probes in dense graphs hit claimed slots
    if flags[i] != 0:
        return False
    return _xchg_one(flags, i) == 0


@njit(nogil=True, cache=True)
def claim_one(flags, i):
    return test_and_set(flags, i)


@njit(nogil=True, cache=True)
def claim_many(flags, keys):
    won = 0
    for k in keys:
        if test_and_set(flags, k):
            won += 1
    return won


@njit(nogil=True, cache=True)
def explore(mode, step_ptr, step_idx, base_ptr, base_idx, roots,
            node_flags, ans_flags, answers, stack, cursor):
    """Claim-guarded depth-first traversal from ``roots``.

    A node is claimed when the traversal is about to enter it, as a
    backtracking evaluator would call the guarded subgoal; each stack frame
    keeps a cursor into its node's edge list. Returns (answers recorded,
    nodes claimed); answer constants land in ``answers[:n]``. ``stack`` and
    ``cursor`` need one slot per node.
    """
    n_ans = 0
    n_claims = 0
    for r in roots:
        if not test_and_set(node_flags, r):
            continue
        n_claims += 1
        if mode == ARRIVAL:
            answers[n_ans] = r
            n_ans += 1
        else:
            n_ans = _record_base(r, base_ptr, base_idx, ans_flags, answers, n_ans)
        stack[0] = r
        cursor[0] = step_ptr[r]
        top = 1
        while top > 0:
            w = stack[top - 1]
            j = cursor[top - 1]
            end = step_ptr[w + 1]
            entered = False
            while j < end:
                z = step_idx[j]
                j += 1
                if test_and_set(node_flags, z):
                    cursor[top - 1] = j
                    n_claims += 1
                    if mode == ARRIVAL:
                        answers[n_ans] = z
                        n_ans += 1
                    else:
                        n_ans = _record_base(z, base_ptr, base_idx, ans_flags, answers, n_ans)
                    stack[top] = z
                    cursor[top] = step_ptr[z]
                    top += 1
                    entered = True
                    break
            if not entered:
                top -= 1
    return n_ans, n_claims


@njit(nogil=True, cache=True, inline="always")
def _record_base(w, base_ptr, base_idx, ans_flags, answers, n_ans):
    for j in range(base_ptr[w], base_ptr[w + 1]):
        h = base_idx[j]
        if test_and_set(ans_flags, h):
            answers[n_ans] = h
            n_ans += 1
    return n_ans


def warm_up():
    """Force compilation (or cache load) outside timed regions."""
    ptr = np.zeros(3, np.int64)
    idx = np.zeros(0, np.int64)
    flags = np.zeros(2, np.uint8)
    roots = np.zeros(1, np.int64)
    out = np.zeros(2, np.int64)
    explore(ARRIVAL, ptr, idx, ptr, idx, roots, flags, flags, out, out.copy(), out.copy())
    claim_one(np.zeros(1, np.uint8), 0)
    claim_many(np.zeros(1, np.uint8), roots)
