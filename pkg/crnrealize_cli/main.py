from crnrealize_cli.basecli import cli
import crnrealize_cli.realize
import crnrealize_cli.verify
import crnrealize_cli.export
import crnrealize_cli.info


# ============================================================================
if __name__ == '__main__':
    cli()
