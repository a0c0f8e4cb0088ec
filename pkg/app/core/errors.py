"""
Liouville Ellipsoid - 例外類別
所有數值與定義域錯誤都繼承自 LiouvilleError
"""

from typing import Any, Optional


class LiouvilleError(Exception):
    """本套件所有錯誤的基礎類別"""

    def __init__(self, message: str, value: Optional[Any] = None):
        super().__init__(message)
        self.value = value


class DomainError(LiouvilleError, ValueError):
    """參數超出定義域"""


class PoleError(DomainError):
    """在函數的極點上求值"""


class OrderTooLarge(DomainError):
    """級數截斷階數超過配置上限"""


class NonMonotoneInput(DomainError):
    """取樣表不是嚴格遞增"""


class NonConvergence(LiouvilleError, ArithmeticError):
    """迭代在步數上限內未收斂"""

    def __init__(self, message: str, value: Optional[Any] = None, residual: Optional[float] = None):
        super().__init__(message, value)
        self.residual = residual


class BranchError(LiouvilleError, ArithmeticError):
    """閉式結果的虛部殘差過大，通常代表選錯分支"""

    def __init__(self, message: str, value: Optional[Any] = None, residual: Optional[float] = None):
        super().__init__(message, value)
        self.residual = residual


class ConstantMismatch(LiouvilleError, ArithmeticError):
    """積分得到的完全常數與閉式解不一致"""

    def __init__(self, message: str, value: Optional[Any] = None, residual: Optional[float] = None):
        super().__init__(message, value)
        self.residual = residual


class ReversionDegenerate(LiouvilleError, ZeroDivisionError):
    """級數反演的首項係數為零"""


class MeshIOError(LiouvilleError, OSError):
    """網格匯出或讀取失敗"""
