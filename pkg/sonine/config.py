from pydantic_settings import BaseSettings
from pydantic import Field, AliasChoices


class Settings(BaseSettings):
    # Quadrature engine
    quad_tol: float = Field(
        default=1e-10,
        validation_alias=AliasChoices("SONINE_QUAD_TOL", "quad_tol"),
    )
    quad_max_panels: int = Field(
        default=4000,
        validation_alias=AliasChoices("SONINE_QUAD_MAX_PANELS", "quad_max_panels"),
    )
    quad_max_rounds: int = Field(
        default=60,
        validation_alias=AliasChoices("SONINE_QUAD_MAX_ROUNDS", "quad_max_rounds"),
    )
    # Upper bound on the number of nodes handed to an integrand in one call
    quad_chunk_nodes: int = Field(
        default=2**18,
        validation_alias=AliasChoices("SONINE_QUAD_CHUNK_NODES", "quad_chunk_nodes"),
    )
    deriv_tol: float = Field(
        default=1e-9,
        validation_alias=AliasChoices("SONINE_DERIV_TOL", "deriv_tol"),
    )

    # Special functions
    specfun_series_tolerance: float = Field(
        default=1e-12,
        validation_alias=AliasChoices(
            "SONINE_SPECFUN_SERIES_TOLERANCE",
            "SONINE_SERIES_TOLERANCE",
            "specfun_series_tolerance",
        ),
    )
    specfun_max_terms: int = Field(
        default=384,
        validation_alias=AliasChoices("SONINE_SPECFUN_MAX_TERMS", "specfun_max_terms"),
    )
    specfun_tail_cutoff: float = Field(
        default=2000.0,
        validation_alias=AliasChoices("SONINE_SPECFUN_TAIL_CUTOFF", "specfun_tail_cutoff"),
    )

    # Conjugacy checks
    conjugacy_tol_algebraic: float = Field(
        default=1e-7,
        validation_alias=AliasChoices("SONINE_CONJUGACY_TOL_ALGEBRAIC", "conjugacy_tol_algebraic"),
    )
    conjugacy_tol_logarithmic: float = Field(
        default=1e-5,
        validation_alias=AliasChoices("SONINE_CONJUGACY_TOL_LOGARITHMIC", "conjugacy_tol_logarithmic"),
    )
    conjugacy_grid: int = Field(
        default=20,
        validation_alias=AliasChoices("SONINE_CONJUGACY_GRID", "conjugacy_grid"),
    )
    # Grid used when an OperatorContext certifies its pair on construction
    context_check_grid: int = Field(
        default=5,
        validation_alias=AliasChoices("SONINE_CONTEXT_CHECK_GRID", "context_check_grid"),
    )

    # Boundary value problem solver
    bvp_mesh_size: int = Field(
        default=257,
        validation_alias=AliasChoices("SONINE_BVP_MESH_SIZE", "bvp_mesh_size"),
    )
    bvp_tol: float = Field(
        default=1e-8,
        validation_alias=AliasChoices("SONINE_BVP_TOL", "bvp_tol"),
    )
    bvp_max_iter: int = Field(
        default=200,
        validation_alias=AliasChoices("SONINE_BVP_MAX_ITER", "bvp_max_iter"),
    )

    # CLI
    output_dir: str = Field(
        default="runs",
        validation_alias=AliasChoices("SONINE_OUTPUT_DIR", "output_dir"),
    )
    log_level: str = Field(
        default="INFO",
        validation_alias=AliasChoices("SONINE_LOG_LEVEL", "LOG_LEVEL", "log_level"),
    )

    class Config:
        env_file = ".env"


settings = Settings()
