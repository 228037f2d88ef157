"""
Pydantic models: run configuration and HTTP schemas.
"""
