#!/usr/bin/env node
import { main } from "./render.js";

main();
