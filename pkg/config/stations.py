"""FLUXNET 기준 관측소 카탈로그.

관측소별 공개 시간 단위 행 수, 학습/검증/시험 분할 경계, 그리고 피처별
참고 통계(최소/최대/평균)를 데이터로 보관한다. 참고 통계는 정보 제공용이며
계산 결과와 나란히 출력할 때만 쓴다.
"""

from dataclasses import dataclass, field
from datetime import datetime

MISSING_SENTINEL = -9999.0

# 피처 논리 이름 (입력 열 순서)
FEATURE_NAMES = ("lw_rad", "sw_rad", "air_temp", "pressure", "wind", "precip", "soil_moisture")
TARGET_NAME = "soil_temp_5cm"

FEATURE_LABELS = {
    "lw_rad": "Longwave radiation (W/m2)",
    "sw_rad": "Shortwave radiation (W/m2)",
    "air_temp": "Air temperature (deg C)",
    "pressure": "Atmospheric pressure (kpa)",
    "wind": "Wind speed (m/s)",
    "precip": "Precipitation (mm)",
    "soil_moisture": "Soil moisture (% by volume)",
    "soil_temp_5cm": "Soil temperature 5cm (deg C)",
}


@dataclass(frozen=True)
class StationInfo:
    station_id: str
    rows: int
    train_start: datetime
    val_start: datetime
    test_start: datetime
    test_end: datetime
    # 피처 이름 → (min, max, mean)
    reference: dict[str, tuple[float, float, float]] = field(default_factory=dict)

    @property
    def boundaries(self) -> tuple[datetime, datetime]:
        """(학습 종료 = 검증 시작, 검증 종료 = 시험 시작)."""
        return self.val_start, self.test_start


def _d(text: str) -> datetime:
    return datetime.fromisoformat(text)


STATIONS: dict[str, StationInfo] = {
    "NL-Loo": StationInfo(
        "NL-Loo", 177551, _d("2000-01-01"), _d("2010-07-02"), _d("2012-01-01"), _d("2014-12-31"),
        {
            "lw_rad": (188.7, 454.083, 337.726),
            "sw_rad": (0.0, 1005.0, 116.155),
            "air_temp": (-14.86, 34.82, 10.103),
            "pressure": (96.053, 104.169, 101.084),
            "wind": (0.024, 9.377, 2.352),
            "precip": (0.0, 7.641, 0.047),
            "soil_moisture": (0.0, 25.1, 8.6),
        },
    ),
    "FR-Lbr": StationInfo(
        "FR-Lbr", 35063, _d("2005-01-01"), _d("2007-10-20"), _d("2008-03-14"), _d("2008-12-31"),
        {
            "lw_rad": (192.81, 457.64, 334.129),
            "sw_rad": (0.0, 1017.46, 146.771),
            "air_temp": (-7.71, 36.18, 12.877),
            "pressure": (98.198, 103.85, 101.573),
            "wind": (0.039, 12.813, 3.114),
            "precip": (0.0, 1.709, 0.039),
            "soil_moisture": (17.711, 94.447, 38.396),
        },
    ),
    "BE-Vie": StationInfo(
        "BE-Vie", 131495, _d("2000-01-01"), _d("2010-07-02"), _d("2012-01-01"), _d("2014-12-31"),
        {
            "lw_rad": (MISSING_SENTINEL, MISSING_SENTINEL, MISSING_SENTINEL),  # 장파 복사 미관측
            "sw_rad": (0.0, 1012.67, 114.1476),
            "air_temp": (-15.31, 34.23, 8.3922),
            "pressure": (91.505, 98.546, 96.0348),
            "wind": (0.013, 10.095, 2.442),
            "precip": (0.0, 5.471, 0.0725),
            "soil_moisture": (14.7, 43.8, 31.271),
        },
    ),
    "IT-Col": StationInfo(
        "IT-Col", 43841, _d("2009-12-30"), _d("2013-07-01"), _d("2013-12-31"), _d("2014-12-31"),
        {
            "lw_rad": (142.891, 388.976, 281.703),
            "sw_rad": (0.0, 1155.14, 178.35),
            "air_temp": (-14.055, 28.601, 7.249),
            "pressure": (82.119, 86.631, 84.895),
            "wind": (0.025, 6.94, 1.625),
            "precip": (0.0, 5.943, 0.098),
            "soil_moisture": (11.324, 57.785, 31.511),
        },
    ),
    "FI-Hyy": StationInfo(
        "FI-Hyy", 46055, _d("2009-09-30"), _d("2013-06-04"), _d("2013-12-13"), _d("2014-12-31"),
        {
            "lw_rad": (152.786, 432.23, 301.933),
            "sw_rad": (0.0, 855.4, 91.237),
            "air_temp": (-26.57, 32.16, 4.056),
            "pressure": (94.581, 103.374, 99.148),
            "wind": (0.04, 9.838, 3.27),
            "precip": (0.0, 3.008, 0.047),
            "soil_moisture": (5.407, 64.907, 27.366),
        },
    ),
    "CH-Lae": StationInfo(
        "CH-Lae", 81851, _d("2005-08-30"), _d("2012-03-13"), _d("2013-02-17"), _d("2014-12-31"),
        {
            "lw_rad": (135.786, 423.858, 304.537),
            "sw_rad": (0.0, 1074.41, 136.899),
            "air_temp": (-17.12, 31.82, 7.784),
            "pressure": (89.617, 95.295, 93.244),
            "wind": (0.004, 10.497, 2.23),
            "precip": (0.0, 3.551, 0.0675),
            "soil_moisture": (7.7, 32.74, 21.89),
        },
    ),
}

# 보고서 열 순서
STATION_ORDER = ("NL-Loo", "FR-Lbr", "BE-Vie", "IT-Col", "FI-Hyy", "CH-Lae")


def station_info(station_id: str) -> StationInfo | None:
    return STATIONS.get(station_id)
