"""测试公共配置"""
import sys
from pathlib import Path

import numpy as np
import pytest

# 添加项目根目录到 Python 路径
sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from app.config.settings import settings  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    """把 settings.output_dir 指向临时目录"""
    monkeypatch.setattr(settings, "output_dir", str(tmp_path))
    return tmp_path


@pytest.fixture
def random_unitary(rng):
    """Haar 随机幺正矩阵生成器（QR 分解 + 相位修正）"""

    def make(d):
        z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
        q, r = np.linalg.qr(z)
        return q * (np.diag(r) / np.abs(np.diag(r)))

    return make
