#!/usr/bin/env python3
"""
Scene Graph Layout Toolkit - API Startup Script

This script starts the FastAPI server that external sequence models call
to encode samples, decode predictions and score layouts.
"""
import os
import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from dotenv import load_dotenv

load_dotenv()

import uvicorn

if __name__ == "__main__":
    host = os.getenv("HOST", "127.0.0.1")
    port = int(os.getenv("PORT", 8000))
    print(f"Starting Scene Graph Layout Toolkit API on http://{host}:{port}")
    print("Press Ctrl+C to stop the server\n")
    uvicorn.run(
        "backend.api.main:app",
        host=host,
        port=port,
        reload=os.getenv("DEBUG", "false").lower() == "true",
    )
