# tests/conftest.py
import random

import pytest
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool

from app.config import Settings
from app.database import Base, make_engine


@pytest.fixture
def settings():
    return Settings(seed=0, quiet=True)


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def db():
    engine = make_engine("sqlite://", poolclass=StaticPool)
    import app.models  # noqa: F401
    Base.metadata.create_all(bind=engine)
    Session = sessionmaker(bind=engine, autoflush=False, autocommit=False)
    with Session() as s:
        yield s
    Base.metadata.drop_all(bind=engine)
