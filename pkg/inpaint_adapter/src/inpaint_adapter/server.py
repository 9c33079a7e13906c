"""FastAPI app implementing POST /v1/inpaint and GET /v1/health."""

from __future__ import annotations

from dataclasses import dataclass

import click
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .backends import get_backend, hint_tensor
from .codec import RequestError, decode_request, encode_response


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8844
    backend: str = "echo"
    max_views: int = 32
    depth_mode: str = "minmax"   # depth normalization fed to the backend

    def __post_init__(self):
        if self.max_views < 1:
            raise ValueError("max_views must be >= 1")
        if self.depth_mode not in ("minmax", "metric"):
            raise ValueError(f"unknown depth mode {self.depth_mode!r}")


def create_app(config: ServerConfig | None = None) -> FastAPI:
    config = config or ServerConfig()
    backend = get_backend(config.backend)
    app = FastAPI(title="inpaint-adapter", version=__version__)

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "version": __version__, "backend": config.backend,
                "max_views": config.max_views}

    @app.post("/v1/inpaint")
    async def inpaint(request: Request):
        try:
            doc = await request.json()
        except Exception:
            return JSONResponse({"error": "body is not valid JSON"}, status_code=400)
        try:
            views, prompt, seed, cond_idx = decode_request(doc)
            if len(views) > config.max_views:
                raise RequestError(
                    f"request has {len(views)} views; this server accepts "
                    f"at most {config.max_views}")
            hints = [hint_tensor(v, config.depth_mode) for v in views]
        except RequestError as e:
            return JSONResponse({"error": str(e)}, status_code=400)
        try:
            images = backend(views, hints, prompt, seed, cond_idx)
        except Exception as e:  # backend failure is a service-side problem
            return JSONResponse({"error": f"backend failure: {e}"}, status_code=503)
        if len(images) != len(views):
            return JSONResponse({"error": "backend returned wrong image count"},
                                status_code=503)
        return JSONResponse(encode_response(images, seed))

    return app


def serve(config: ServerConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port,
                log_level="warning")


@click.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8844)
@click.option("--backend", default="echo", help="registered backend name")
@click.option("--max-views", type=int, default=32)
@click.option("--depth-mode", default="minmax", type=click.Choice(["minmax", "metric"]))
def main(host, port, backend, max_views, depth_mode):
    """Serve the inpainting wire protocol."""
    serve(ServerConfig(host=host, port=port, backend=backend,
                       max_views=max_views, depth_mode=depth_mode))


if __name__ == "__main__":
    main()
