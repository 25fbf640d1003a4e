from .settings import Settings

settings = Settings()

__all__ = ["settings", "Settings"]
