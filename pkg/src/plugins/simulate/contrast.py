import numpy as np

# 可探测风速窗口的节点，m/s
WINDOW_KNOTS = (1.5, 3.0, 6.0, 10.0)


def damping_contrast(v, damping_max=6.0):
    """油膜相对干净海面的衰减量（dB，正值表示变暗）

    v <= 1.5 时为 0；[1.5, 3] 余弦上升；[3, 6] 为 damping_max；
    [6, 10] 余弦下降；v >= 10 时为 0。处处连续。
    标量输入返回 float，数组输入按广播返回数组。
    """
    scalar = np.ndim(v) == 0 and np.ndim(damping_max) == 0
    v = np.maximum(np.asarray(v, dtype=np.float64), 0.0)
    dmax = np.asarray(damping_max, dtype=np.float64)
    low, rise, fall, high = WINDOW_KNOTS

    up = 0.5 * (1.0 - np.cos(np.pi * (v - low) / (rise - low)))
    down = 0.5 * (1.0 + np.cos(np.pi * (v - fall) / (high - fall)))
    weight = np.select(
        [v <= low, v < rise, v <= fall, v < high],
        [0.0, up, 1.0, down],
        default=0.0,
    )
    out = weight * dmax
    return float(out) if scalar else out
