"""Independent brute-force oracles used across the test suite.

Everything here is written with plain python loops / BFS, deliberately
sharing no code path with the library implementations it checks.
"""
import numpy as np


def conv2d_oracle(x, w, b, stride, padding, groups):
    """Direct summation over zero-padded windows."""
    h, wd, cin = x.shape
    oc, icg, kh, kw = w.shape
    ocg = oc // groups
    xp = np.zeros((h + 2 * padding, wd + 2 * padding, cin))
    xp[padding:padding + h, padding:padding + wd] = x
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (wd + 2 * padding - kw) // stride + 1
    out = np.zeros((ho, wo, oc))
    for oy in range(ho):
        for ox in range(wo):
            for o in range(oc):
                g = o // ocg
                acc = b[o]
                for i in range(kh):
                    for j in range(kw):
                        for c in range(icg):
                            acc += xp[oy * stride + i, ox * stride + j, g * icg + c] * w[o, c, i, j]
                out[oy, ox, o] = acc
    return out


def group_stats_oracle(x, groups):
    """Per-group mean and variance, computed with python sums."""
    h, w, c = x.shape
    cg = c // groups
    means, variances = [], []
    for g in range(groups):
        vals = [x[i, j, g * cg + k] for i in range(h) for j in range(w) for k in range(cg)]
        m = sum(vals) / len(vals)
        v = sum((u - m) ** 2 for u in vals) / len(vals)
        means.append(m)
        variances.append(v)
    return means, variances


def morph_oracle(mask, radius, erode):
    """Brute-force square-neighborhood scan; out-of-image counts as
    background for erosion and is skipped for dilation."""
    h, w = mask.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            vals = []
            for i in range(y - radius, y + radius + 1):
                for j in range(x - radius, x + radius + 1):
                    if 0 <= i < h and 0 <= j < w:
                        vals.append(mask[i, j] >= 0.5)
                    elif erode:
                        vals.append(False)
            out[y, x] = float(all(vals) if erode else any(vals))
    return out


def trimap_oracle(mask, radius):
    er = morph_oracle(mask, radius, True)
    di = morph_oracle(mask, radius, False)
    tri = np.zeros(mask.shape)
    tri[di >= 0.5] = 0.5
    tri[er >= 0.5] = 1.0
    return tri


def _largest_cc_bfs(binary):
    """Largest 4-connected component via BFS flood fill."""
    h, w = binary.shape
    seen = np.zeros((h, w), dtype=bool)
    best = np.zeros((h, w))
    best_size = 0
    for sy in range(h):
        for sx in range(w):
            if not binary[sy, sx] or seen[sy, sx]:
                continue
            comp = []
            queue = [(sy, sx)]
            seen[sy, sx] = True
            while queue:
                y, x = queue.pop()
                comp.append((y, x))
                for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < h and 0 <= nx < w and binary[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((ny, nx))
            if len(comp) > best_size:
                best_size = len(comp)
                best = np.zeros((h, w))
                for y, x in comp:
                    best[y, x] = 1.0
    return best


def connectivity_oracle(pred, gt, step=0.1, theta=0.15):
    """Exhaustive flood-fill version of the connectivity error."""
    nlev = int(round(1.0 / step))
    l_map = np.full(pred.shape, -1.0)
    for k in range(1, nlev + 1):
        t = k * step
        omega = _largest_cc_bfs((pred >= t) & (gt >= t))
        for y in range(pred.shape[0]):
            for x in range(pred.shape[1]):
                if l_map[y, x] == -1.0 and omega[y, x] == 0:
                    l_map[y, x] = (k - 1) * step
    l_map[l_map == -1.0] = 1.0
    total = 0.0
    for y in range(pred.shape[0]):
        for x in range(pred.shape[1]):
            dp = pred[y, x] - l_map[y, x]
            dg = gt[y, x] - l_map[y, x]
            phi_p = 1.0 - dp * (dp >= theta)
            phi_g = 1.0 - dg * (dg >= theta)
            total += abs(phi_p - phi_g)
    return total / pred.size


def guided_pool_oracle(feat, enc):
    """Per-window sum of products, python loops."""
    h, w, c = feat.shape
    out = np.zeros((h // 2, w // 2, c))
    for oy in range(h // 2):
        for ox in range(w // 2):
            for ch in range(c):
                acc = 0.0
                for dy in range(2):
                    for dx in range(2):
                        acc += feat[2 * oy + dy, 2 * ox + dx, ch] * enc[2 * oy + dy, 2 * ox + dx, 0]
                out[oy, ox, ch] = acc
    return out
