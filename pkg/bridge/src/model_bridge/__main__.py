import argparse

import uvicorn

from .app import create_app
from .backends import EchoSummarizer, RecordedSummarizer


def main(argv=None):
    parser = argparse.ArgumentParser(prog="model-bridge")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--recordings", help="JSON file of recorded summarize responses; "
                                             "defaults to the canned echo backend")
    args = parser.parse_args(argv)
    summarizer = RecordedSummarizer(args.recordings) if args.recordings else EchoSummarizer()
    uvicorn.run(create_app(summarizer=summarizer), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
