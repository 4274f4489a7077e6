"""Kernel backend selection: compiled extension when built, numpy fallback otherwise."""
try:
    from cbdefs import _kernels as _impl

    COMPILED = True
except ImportError:  # extension not built on this install
    from cbdefs import _kernels_py as _impl

    COMPILED = False

lr_train = _impl.lr_train
rank_auc = _impl.rank_auc


def backend_name() -> str:
    return "compiled" if COMPILED else "python"
