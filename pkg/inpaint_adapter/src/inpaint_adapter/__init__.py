"""Reference server for the splatedit inpainting wire protocol."""

__version__ = "0.1.0"

from .backends import echo_backend, get_backend, hint_tensor, register_backend
from .codec import RequestError, View, decode_request, encode_response
from .server import ServerConfig, create_app, serve

__all__ = [
    "RequestError", "ServerConfig", "View", "create_app", "decode_request",
    "echo_backend", "encode_response", "get_backend", "hint_tensor",
    "register_backend", "serve",
]
