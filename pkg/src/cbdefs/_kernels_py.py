"""Pure-numpy training/scoring kernels, used when the compiled extension is absent."""
import numpy as np

# Backtracking budget per gradient-descent iteration.
MAX_HALVINGS = 20


def _nll(z, y, w, l2):
    # mean negative log-likelihood from the linear predictor z = Xw + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    if l2 > 0.0:
        loss += 0.5 * l2 * float(w @ w)
    return loss


def lr_train(X, y, learning_rate, max_iters, tolerance, l2):
    """Full-batch gradient descent on the logistic loss from zero init.

    Returns (coef, intercept, iterations_accepted, final_loss).  The step is
    halved (up to MAX_HALVINGS times) whenever it would increase the loss; an
    iteration with no acceptable step terminates training.  Raises
    ArithmeticError on a non-finite loss or gradient.
    """
    m, n = X.shape
    w = np.zeros(n)
    b = 0.0
    z = np.zeros(m)
    loss = _nll(z, y, w, l2)
    iters = 0
    for _ in range(max_iters):
        p = 1.0 / (1.0 + np.exp(-z))
        r = (p - y) / m
        gw = X.T @ r
        if l2 > 0.0:
            gw = gw + l2 * w
        gb = float(r.sum())
        ginf = max(float(np.max(np.abs(gw))) if n else 0.0, abs(gb))
        if not np.isfinite(loss) or not np.isfinite(ginf):
            raise ArithmeticError("non-finite loss or gradient (check feature scaling)")
        if ginf < tolerance:
            break
        step = learning_rate
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            w_new = w - step * gw
            b_new = b - step * gb
            z_new = X @ w_new + b_new
            loss_new = _nll(z_new, y, w_new, l2)
            if loss_new <= loss:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        w, b, z, loss = w_new, b_new, z_new, loss_new
        iters += 1
    return w, b, iters, loss


def lr_loss_grad(X, y, w, intercept, l2):
    """Loss and analytic gradient at an arbitrary parameter point.

    Same formulas the trainer iterates; exposed so the gradient can be checked
    against finite differences.
    """
    m = X.shape[0]
    z = X @ w + intercept
    loss = _nll(z, y, w, l2)
    p = 1.0 / (1.0 + np.exp(-z))
    r = (p - y) / m
    gw = X.T @ r
    if l2 > 0.0:
        gw = gw + l2 * w
    return loss, gw, float(r.sum())


def rank_auc(scores, labels):
    """Mann-Whitney AUC via rank sums with midrank tie handling, O(n log n)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n = scores.shape[0]
    n_pos = int(labels.sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: both classes must be present")
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    # 1-based ranks; tied values share the mean of the ranks they span
    starts = np.flatnonzero(np.r_[True, s[1:] != s[:-1]])
    bounds = np.r_[starts, n]
    midranks = (bounds[:-1] + bounds[1:] + 1) / 2.0
    ranks = np.repeat(midranks, np.diff(bounds))
    pos_rank_sum = float(ranks[labels[order] == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
