"""U-calibration: regret of forecasts against every bounded proper scoring rule."""
from .agents import UtilityMatrix, wager_agent
from .forecasters import ForecastFTPL, ForecastHedge, simulate
from .metrics import agent_reg, cal, reg, regret_report, vcal, vreg
from .scoring import BivariateRule, PLScoringRule, VShapedRule, brier
from .transcript import Transcript
from .ucal_lp import max_agent_reg

__all__ = [
    "BivariateRule",
    "ForecastFTPL",
    "ForecastHedge",
    "PLScoringRule",
    "Transcript",
    "UtilityMatrix",
    "VShapedRule",
    "agent_reg",
    "brier",
    "cal",
    "max_agent_reg",
    "reg",
    "regret_report",
    "simulate",
    "vcal",
    "vreg",
    "wager_agent",
]
__version__ = "0.1.0"
