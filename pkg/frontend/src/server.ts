import { createApp } from "./app.js";

const port = Number(process.env.PORT ?? 0);
const host = process.env.HOST ?? "127.0.0.1";

const server = createApp().listen(port, host, () => {
  const addr = server.address();
  if (addr && typeof addr === "object") {
    // stdout line is machine-readable: supervisors parse the URL from it
    console.log(`listening on http://${addr.address}:${addr.port}`);
  }
});

for (const sig of ["SIGINT", "SIGTERM"] as const) {
  process.on(sig, () => server.close(() => process.exit(0)));
}
