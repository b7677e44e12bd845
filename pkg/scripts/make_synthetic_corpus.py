"""Write a synthetic corpus file for runs that read data.corpus_path."""
import argparse
import logging

from app.core.config.base_config import SyntheticCorpusSpec
from app.core.etl.corpus import save_corpus
from app.core.harness.synthetic import generate_synthetic_corpus

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def main():
    parser = argparse.ArgumentParser(description="Generate a synthetic RAI / non-RAI corpus")
    parser.add_argument("path", help="Output .npz file")
    parser.add_argument("--n-rai", type=int, default=1000)
    parser.add_argument("--n-nonrai", type=int, default=1000)
    parser.add_argument("--image-size", type=int, default=32)
    parser.add_argument("--noise-sigma", type=float, default=0.02)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    spec = SyntheticCorpusSpec(
        n_rai=args.n_rai,
        n_nonrai=args.n_nonrai,
        image_size=args.image_size,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    corpus = generate_synthetic_corpus(spec)
    path = save_corpus(corpus, args.path)
    logger.info(f"Wrote {len(corpus)} images to {path}")


if __name__ == "__main__":
    main()
