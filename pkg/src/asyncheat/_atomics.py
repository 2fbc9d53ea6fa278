"""Lock-free scalar access from compiled code.

numba has no CPU atomics, so these intrinsics emit LLVM ``load atomic`` /
``store atomic`` with acquire/release ordering directly. A slot read this way
is never torn and never hoisted out of a spin loop.
"""

import ctypes

from numba import types
from numba.core import cgutils
from numba.extending import intrinsic


def _item_pointer(context, builder, aryty, idxty, ary_val, idx_val):
    ary = context.make_array(aryty)(context, builder, ary_val)
    idx = context.cast(builder, idx_val, idxty, types.intp)
    return cgutils.get_item_pointer(context, builder, aryty, ary, [idx], wraparound=False)


@intrinsic
def atomic_load(typingctx, arr, idx):
    def codegen(context, builder, sig, args):
        aryty, idxty = sig.args
        ptr = _item_pointer(context, builder, aryty, idxty, args[0], args[1])
        return builder.load_atomic(ptr, "acquire", align=aryty.dtype.bitwidth // 8)

    return arr.dtype(arr, idx), codegen


@intrinsic
def atomic_store(typingctx, arr, idx, val):
    def codegen(context, builder, sig, args):
        aryty, idxty, valty = sig.args
        ptr = _item_pointer(context, builder, aryty, idxty, args[0], args[1])
        v = context.cast(builder, args[2], valty, aryty.dtype)
        builder.store_atomic(v, ptr, "release", align=aryty.dtype.bitwidth // 8)
        return context.get_dummy_value()

    return types.void(arr, idx, val), codegen


_libc = ctypes.CDLL(None)
sched_yield = _libc.sched_yield
sched_yield.restype = ctypes.c_int
sched_yield.argtypes = []
