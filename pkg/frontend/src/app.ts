import express, { type Express, type Request, type Response } from "express";
import { z } from "zod";

import { DIM, IDENTITY, embedBatch } from "./embedder.js";
import { generate } from "./generator.js";

export const CAPABILITIES = ["embed", "generate"] as const;

const API_VERSION = 1;

const embedRequest = z.object({
  v: z.number().optional(),
  texts: z.array(z.string()),
});

const generateRequest = z.object({
  v: z.number().optional(),
  prompt: z.string(),
  max_tokens: z.number().int().positive().default(128),
  seed: z.number().int().default(0),
});

function reply(res: Response, status: number, body: Record<string, unknown>) {
  res.status(status).json({ v: API_VERSION, ...body });
}

export function createApp(): Express {
  const app = express();
  app.use(express.json({ limit: "16mb" }));

  app.get("/info", (_req, res) => {
    reply(res, 200, { identity: IDENTITY, capabilities: [...CAPABILITIES], dim: DIM });
  });

  app.post("/embed", (req: Request, res: Response) => {
    const parsed = embedRequest.safeParse(req.body);
    if (!parsed.success) {
      return reply(res, 400, { error: `bad embed request: ${parsed.error.message}` });
    }
    reply(res, 200, { dim: DIM, vectors: embedBatch(parsed.data.texts) });
  });

  app.post("/generate", (req: Request, res: Response) => {
    const parsed = generateRequest.safeParse(req.body);
    if (!parsed.success) {
      return reply(res, 400, { error: `bad generate request: ${parsed.error.message}` });
    }
    reply(res, 200, { text: generate(parsed.data.prompt, parsed.data.max_tokens) });
  });

  // Advertised capabilities are embed and generate only; the media
  // endpoints exist so clients get a structured protocol error rather
  // than a bare 404.
  for (const cap of ["ocr", "transcribe"]) {
    app.post(`/${cap}`, (_req, res) => {
      reply(res, 501, { error: `capability ${cap} not supported`, capability: cap });
    });
  }

  app.use((_req, res) => reply(res, 404, { error: "not found" }));
  return app;
}
