from pydantic_settings import BaseSettings
from pydantic import ConfigDict

class Settings(BaseSettings):
    PROJECT_NAME: str = "HyperPurify Simulator"
    VERSION: str = "1.0.0"

    # Reports
    REPORT_OUTPUT_DIR: str = "reports"
    DEFAULT_SEED: int = 20240917

    # Runtime
    LOG_LEVEL: str = "INFO"
    SWEEP_WORKERS: int = 4

    # API Settings
    API_V1_STR: str = "/api/v1"

    # CORS Settings (for notebooks / dashboards reading reports)
    BACKEND_CORS_ORIGINS: list = [
        "http://localhost:3000",
        "http://localhost:8888"]

    model_config = ConfigDict(env_file=".env", extra="ignore")

settings = Settings()
