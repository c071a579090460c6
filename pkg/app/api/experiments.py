from typing import Optional

from fastapi import APIRouter, HTTPException, Query, status

from ..errors import NumericalError
from ..models.experiment import ExperimentConfig, ExperimentKind, ExperimentReport
from ..services.experiment_service import ExperimentService

router = APIRouter()
experiment_service = ExperimentService()


def _run(config: ExperimentConfig, seed: Optional[int] = None) -> ExperimentReport:
    try:
        return experiment_service.run(config, seed=seed)
    except NumericalError as e:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail=str(e)
        )
    except ValueError as e:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=str(e)
        )


@router.post("/run", response_model=ExperimentReport)
def run_experiment(
    config: ExperimentConfig,
    seed: Optional[int] = Query(None, ge=0, description="Overrides the seed in the config")
):
    """Run one configured experiment and return its report

    The report is the same payload the cli writes, minus the metadata timestamp.
    """
    return _run(config, seed)


@router.get("/syndrome-table", response_model=ExperimentReport)
def get_syndrome_table(F: float = Query(..., ge=0.0, le=1.0, description="Werner fidelity of both qubits")):
    """Error syndrome table for Werner noise of fidelity F in both degrees of freedom"""
    config = ExperimentConfig(experiment=ExperimentKind.SYNDROME_TABLE, parameters={"F": F})
    return _run(config)


@router.get("/bf-curve", response_model=ExperimentReport)
def get_bf_curve():
    """Purified fidelity against input fidelity for bit-flip channels"""
    return _run(ExperimentConfig(experiment=ExperimentKind.BF_CURVE))
