"""Embedding service for the `service` provider.

POST /embed  {"model": str, "input": [str, ...]}  ->  {"vectors": [[float, ...], ...]}

    pip install sentence-transformers fastapi uvicorn
    python tools/embedding_server.py --model sentence-transformers/all-MiniLM-L6-v2 --port 8090
"""

import argparse
import os

import uvicorn
from fastapi import FastAPI, Header, HTTPException
from pydantic import BaseModel
from sentence_transformers import SentenceTransformer


class EmbedRequest(BaseModel):
    model: str = ""
    input: list[str]


def build_app(model_name: str, token: str | None) -> FastAPI:
    encoder = SentenceTransformer(model_name)
    app = FastAPI()

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "model": model_name}

    @app.post("/embed")
    def embed(req: EmbedRequest, authorization: str | None = Header(default=None)):
        if token and authorization != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="unauthorized")
        if not req.input:
            return {"vectors": []}
        vectors = encoder.encode(req.input, convert_to_numpy=True, normalize_embeddings=False)
        return {"vectors": vectors.astype(float).tolist()}

    return app


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--model", default="sentence-transformers/all-MiniLM-L6-v2")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8090)
    parser.add_argument("--token", default=os.environ.get("VARIANT_TOKEN"))
    args = parser.parse_args()
    uvicorn.run(build_app(args.model, args.token), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
