"""Independent naive oracles used across the test suite.

Everything here is written as plain loops / direct formulas, deliberately
sharing no code with the package implementations it checks.
"""

import numpy as np


def naive_matmul(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for t in range(k):
                acc += a[i, t] * b[t, j]
            out[i, j] = acc
    return out


def naive_conv1d(x, w, stride=1, padding=0, dilation=1):
    """x: (C_in, L), w: (C_out, C_in, K); cross-correlation convention."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    c_in, length = x.shape
    c_out, _, k = w.shape
    xp = np.zeros((c_in, length + 2 * padding))
    xp[:, padding : padding + length] = x
    k_eff = (k - 1) * dilation + 1
    l_out = (length + 2 * padding - k_eff) // stride + 1
    out = np.zeros((c_out, l_out))
    for o in range(c_out):
        for pos in range(l_out):
            acc = 0.0
            for c in range(c_in):
                for j in range(k):
                    acc += xp[c, pos * stride + j * dilation] * w[o, c, j]
            out[o, pos] = acc
    return out


def naive_softmax(x):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def naive_attention(q, k, v):
    """Single-head scaled dot-product attention, no projections."""
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    d = q.shape[-1]
    scores = q @ k.T / np.sqrt(d)
    return naive_softmax(scores) @ v


def naive_ssm_recurrence(x, a_log, w_xproj, w_dt, b_dt, dt_rank, n_state):
    """Step-by-step selective-SSM recurrence for one (T, d_inner) sequence.

    delta_t = softplus(dt_proj(x_proj_dt(x_t)))
    A_bar   = exp(delta_t[:, None] * A)          A = -exp(a_log)
    h_t     = A_bar * h_{t-1} + (delta_t * x_t)[:, None] * B_t[None, :]
    y_t     = sum_n h_t * C_t[None, :]
    """
    x = np.asarray(x, dtype=np.float64)
    t_len, d_inner = x.shape
    a = -np.exp(np.asarray(a_log, dtype=np.float64))
    h = np.zeros((d_inner, n_state))
    ys = []
    for t in range(t_len):
        xt = x[t]
        proj = xt @ w_xproj
        dt_low = proj[:dt_rank]
        b_t = proj[dt_rank : dt_rank + n_state]
        c_t = proj[dt_rank + n_state :]
        delta = np.log1p(np.exp(-np.abs(dt_low @ w_dt + b_dt))) + np.maximum(
            dt_low @ w_dt + b_dt, 0.0
        )
        a_bar = np.exp(delta[:, None] * a)
        h = a_bar * h + (delta * xt)[:, None] * b_t[None, :]
        ys.append((h * c_t[None, :]).sum(axis=1))
    return np.stack(ys)


def fd_gradient(f, x, h=1e-5):
    """Central finite differences of scalar f at array x."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + h
        fp = f(x)
        x[idx] = orig - h
        fm = f(x)
        x[idx] = orig
        g[idx] = (fp - fm) / (2 * h)
        it.iternext()
    return g


def rel_err(analytic, numeric):
    """max_i |a_i - n_i| / max(1, |a_i|, |n_i|)."""
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
    return float(np.max(np.abs(a - n) / scale)) if a.size else 0.0


def fit_sine_amplitude(signal, freq_hz, rate_hz):
    """Least-squares amplitude of a known-frequency sinusoid."""
    sig = np.asarray(signal, dtype=np.float64)
    t = np.arange(len(sig)) / rate_hz
    basis = np.stack([np.sin(2 * np.pi * freq_hz * t), np.cos(2 * np.pi * freq_hz * t), np.ones_like(t)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, sig, rcond=None)
    return float(np.hypot(coef[0], coef[1]))


def band_log_powers(epochs, rate_hz, bands):
    """log mean spectral power per band for each epoch row."""
    epochs = np.asarray(epochs, dtype=np.float64)
    spectra = np.abs(np.fft.rfft(epochs, axis=1)) ** 2
    freqs = np.fft.rfftfreq(epochs.shape[1], d=1.0 / float(rate_hz))
    feats = []
    for lo, hi in bands:
        sel = (freqs >= lo) & (freqs < hi)
        feats.append(np.log(spectra[:, sel].mean(axis=1) + 1e-12))
    return np.stack(feats, axis=1)


SCEEG_ORACLE_BANDS = ((0.75, 3.5), (4.0, 7.5), (8.0, 12.0), (15.0, 25.0))
PPG_ORACLE_BANDS = (
    (0.55, 0.75), (0.75, 0.88), (0.88, 1.00), (1.00, 1.17), (1.17, 1.45),
    (1.9, 2.2), (2.2, 2.9),
)


class GaussianPlugin:
    """Bayes plug-in classifier: full-covariance Gaussian per class."""

    def fit(self, feats, labels):
        self.classes = np.unique(labels)
        self.means, self.invs, self.logdets, self.logpriors = {}, {}, {}, {}
        for c in self.classes:
            x = feats[labels == c]
            mu = x.mean(axis=0)
            cov = np.cov(x.T) + 1e-6 * np.eye(feats.shape[1])
            self.means[c] = mu
            self.invs[c] = np.linalg.inv(cov)
            self.logdets[c] = np.linalg.slogdet(cov)[1]
            self.logpriors[c] = np.log(len(x) / len(feats))
        return self

    def predict(self, feats):
        scores = []
        for c in self.classes:
            d = feats - self.means[c]
            maha = np.einsum("ni,ij,nj->n", d, self.invs[c], d)
            scores.append(self.logpriors[c] - 0.5 * (maha + self.logdets[c]))
        return self.classes[np.argmax(np.stack(scores, axis=1), axis=1)]


def direct_kappa(cm):
    """Cohen's kappa straight from its defining formula."""
    cm = np.asarray(cm, dtype=np.float64)
    total = cm.sum()
    p_o = np.trace(cm) / total
    p_e = float(sum(cm[i, :].sum() * cm[:, i].sum() for i in range(cm.shape[0])) / total**2)
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)
