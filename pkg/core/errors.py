"""도메인 예외 정의.

모든 예외는 내장 예외를 상속하므로 호출자는 ValueError 등으로도 잡을 수 있다.
"""


class ShapeError(ValueError):
    """텐서 차원이 맞지 않을 때 발생한다. 메시지에 관련 shape를 모두 담는다."""


class DomainError(ValueError):
    """정의역 밖의 입력 (0으로 나누기, 비양수 로그, 범위 밖 평활 계수 등)."""


class AutodiffError(RuntimeError):
    """테이프/역전파 사용 규약 위반."""


class NumericalError(FloatingPointError):
    """NaN/Inf 발생 또는 가역 재구성 오차 초과."""


class DataError(ValueError):
    """입력 CSV·정제 단계의 데이터 계약 위반."""


class TrainingDiverged(RuntimeError):
    """학습 손실이 NaN이 되어 중단됨. 마지막 정상 체크포인트 경로를 함께 보관한다."""

    def __init__(self, message: str, last_good_checkpoint: str | None = None):
        super().__init__(message)
        self.last_good_checkpoint = last_good_checkpoint
